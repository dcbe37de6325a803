"""Dense state-vector backend.

States are 1-D complex arrays of length 2**n and operators are square
arrays. Basis labels are big-endian: for a register split as (x, y) with y
holding m qubits, the label of |x, y> is ``x * 2**m + y``.

Every function takes plain array-likes (nested lists work) and returns numpy
arrays; randomness only enters through an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    ConfigError, DimensionMismatch, NegativeCount, NonPowerOfTwo, NormalizationError,
    NotBasisColumns, ShapeError,
)

UNITARY_TOL = 1e-9
MEASURE_NORM_TOL = 1e-6


def make_rng(seed: Optional[int] = None) -> np.random.Generator:
    """PCG64 generator; ``None`` draws the seed from OS entropy."""
    return np.random.Generator(np.random.PCG64(seed))


def _array(x, what: str = "value") -> np.ndarray:
    try:
        arr = np.asarray(x)
    except ValueError as exc:
        raise ShapeError(f"{what} is not a rectangular numeric array") from exc
    if arr.dtype == object or arr.dtype.kind not in "biufc":
        raise ShapeError(f"{what} is not numeric")
    return arr


def is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def qubits_for(dim: int) -> int:
    if not is_power_of_two(dim):
        raise NonPowerOfTwo(f"dimension {dim} is not a power of two")
    return dim.bit_length() - 1


def is_unitary(U, tol: float = UNITARY_TOL) -> bool:
    U = _array(U, "operator")
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        return False
    eye = np.eye(U.shape[0])
    return bool(np.allclose(U @ U.conj().T, eye, rtol=0, atol=tol)
                and np.allclose(U.conj().T @ U, eye, rtol=0, atol=tol))


def apply(U, v) -> np.ndarray:
    """Matrix-vector product U·v (also composes two operators)."""
    U = _array(U, "operator")
    v = _array(v, "state")
    if U.ndim != 2:
        raise ShapeError(f"operator must be a matrix, got {U.ndim}-d array")
    if v.ndim not in (1, 2):
        raise ShapeError(f"operand must be a vector or matrix, got {v.ndim}-d array")
    if U.shape[1] != v.shape[0]:
        raise DimensionMismatch(
            f"operator of dimension {U.shape[0]}x{U.shape[1]} cannot act on length {v.shape[0]}")
    return U @ v


def tensor(a, b) -> np.ndarray:
    """Kronecker product of two vectors or two matrices."""
    a = _array(a, "left operand")
    b = _array(b, "right operand")
    if a.ndim != b.ndim or a.ndim not in (1, 2):
        raise ShapeError("tensor needs two vectors or two matrices")
    return np.kron(a, b)


def tensor_op(A, B) -> np.ndarray:
    A = _array(A, "left operator")
    B = _array(B, "right operator")
    for M in (A, B):
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ShapeError(f"tensorOp needs square matrices, got shape {M.shape}")
    return np.kron(A, B)


def apply_n(U, v, times: int) -> np.ndarray:
    if isinstance(times, bool) or not isinstance(times, (int, np.integer)):
        raise ShapeError(f"repetition count must be an integer, got {times!r}")
    if times < 0:
        raise NegativeCount(f"cannot apply an operator {times} times")
    out = _array(v, "state")
    U = _array(U, "operator")
    for _ in range(int(times)):
        out = apply(U, out)
    return out


# ---------------------------------------------------------------------------
# measurement


def format_probability(p: float) -> str:
    """Short decimal: 10 significant digits, near-zero snapped to 0.0."""
    if abs(p) < 1e-10:
        return "0.0"
    return repr(float(f"{p:.10g}"))


@dataclass(frozen=True)
class MeasurementReport:
    """Born probabilities taken before collapse, plus the sampled outcome.

    For a plain measurement ``subsystem_probs`` is None; for a subsystem
    report it holds one probability list per register.
    """

    probabilities: Tuple[float, ...]
    outcome: int
    config: Optional[Tuple[int, ...]] = None
    subsystem_probs: Optional[Tuple[Tuple[float, ...], ...]] = None

    def lines(self) -> List[str]:
        if self.subsystem_probs is None:
            out = [f"Probability of state {i} is {format_probability(p)}"
                   for i, p in enumerate(self.probabilities)]
            out.append(f"System collapsed to state: {self.outcome}")
            return out
        out = []
        for s, (width, probs) in enumerate(zip(self.config, self.subsystem_probs)):
            for k, p in enumerate(probs):
                label = format(k, f"0{width}b")
                out.append(f"Probability of Subsystem{s} state {label} is:  {format_probability(p)}")
        return out

    def render(self) -> str:
        return "\n".join(self.lines()) + "\n"


def probabilities(v) -> np.ndarray:
    v = _array(v, "state")
    if v.ndim != 1:
        raise ShapeError("a state must be a vector")
    return np.abs(v) ** 2


def _check_state(v) -> np.ndarray:
    v = _array(v, "state")
    if v.ndim != 1:
        raise ShapeError("a state must be a vector")
    if v.shape[0] < 2 or not is_power_of_two(v.shape[0]):
        raise NonPowerOfTwo(f"state length {v.shape[0]} is not a power of two >= 2")
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > MEASURE_NORM_TOL:
        raise NormalizationError(f"state has norm {norm!r}, expected 1")
    return v


def sample(probs: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw; zero-probability outcomes are never returned."""
    cdf = np.cumsum(probs)
    u = rng.random() * cdf[-1]
    idx = int(np.searchsorted(cdf, u, side="right"))
    if idx >= len(probs):
        idx = int(np.flatnonzero(probs)[-1])
    return idx


def measure(v, rng: np.random.Generator) -> Tuple[np.ndarray, MeasurementReport]:
    """Computational-basis measurement; returns the collapsed basis vector."""
    v = _check_state(v)
    probs = probabilities(v)
    outcome = sample(probs, rng)
    collapsed = np.zeros(v.shape[0], dtype=int)
    collapsed[outcome] = 1
    return collapsed, MeasurementReport(tuple(float(p) for p in probs), outcome)


def marginals(v, config: Sequence[int]) -> List[np.ndarray]:
    """Per-register outcome distributions for a split of the qubits.

    Register i covers ``config[i]`` consecutive qubits counted from the most
    significant end of the label.
    """
    v = _array(v, "state")
    config = [int(c) for c in config]
    n = qubits_for(v.shape[0]) if v.ndim == 1 and v.shape[0] >= 1 else None
    if n is None:
        raise ShapeError("a state must be a vector")
    if any(c < 1 for c in config) or sum(config) != n:
        raise ConfigError(f"configuration {config} does not split {n} qubits")
    probs = (np.abs(v) ** 2).reshape([2] * n) if n else np.abs(v) ** 2
    out = []
    start = 0
    for c in config:
        axes = tuple(a for a in range(n) if not start <= a < start + c)
        block = probs.sum(axis=axes) if axes else probs
        out.append(np.asarray(block).reshape(2 ** c))
        start += c
    return out


def subsystems(v, config: Sequence[int],
               rng: np.random.Generator) -> Tuple[np.ndarray, MeasurementReport]:
    """Report per-register marginals, then collapse the whole state like ``measure``."""
    arr = _array(v, "state")
    if arr.ndim != 1:
        raise ShapeError("a state must be a vector")
    if not is_power_of_two(arr.shape[0]):
        raise NonPowerOfTwo(f"state length {arr.shape[0]} is not a power of two")
    try:
        config = tuple(int(c) for c in config)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"configuration must be a list of integers, got {config!r}") from exc
    if any(c < 1 for c in config) or sum(config) != qubits_for(arr.shape[0]):
        raise ConfigError(
            f"configuration {list(config)} sums to {sum(config)}, "
            f"but the state has {qubits_for(arr.shape[0])} qubit(s)")
    parts = marginals(arr, config)
    collapsed, report = measure(arr, rng)
    return collapsed, MeasurementReport(
        report.probabilities, report.outcome, config,
        tuple(tuple(float(p) for p in part) for part in parts))


# ---------------------------------------------------------------------------
# generators


def basis_vector(dim: int, index: int) -> List[int]:
    e = [0] * dim
    e[index] = 1
    return e


def generate_matrix(f: Callable[[List[int]], object], dim: int) -> np.ndarray:
    """Matrix whose i-th column is f applied to the i-th standard basis vector."""
    if isinstance(dim, bool) or not isinstance(dim, (int, np.integer)) or dim < 1:
        raise ShapeError(f"dimension must be a positive integer, got {dim!r}")
    images = [f(basis_vector(int(dim), i)) for i in range(int(dim))]
    try:
        stacked = np.asarray(images)
    except (ValueError, TypeError):
        stacked = None
    if stacked is not None and stacked.ndim == 2 and stacked.dtype.kind in "biufc":
        return stacked.T.copy()
    # slow path only to name the offending column
    columns = []
    for i, image in enumerate(images):
        col = _array(image, f"f(e_{i})")
        if col.ndim != 1:
            raise ShapeError(f"f(e_{i}) is not a vector")
        if columns and col.shape != columns[0].shape:
            raise ShapeError(
                f"f(e_{i}) has length {col.shape[0]}, but f(e_0) has length {columns[0].shape[0]}")
        columns.append(col)
    return np.stack(columns, axis=1)


def oracle(M) -> np.ndarray:
    """Permutation matrix of |x, y> -> |x, y XOR f(x)> for the f encoded by M.

    M has 2**m rows and 2**n columns; column x is the one-hot encoding of
    f(x). The result is an exact integer matrix of size 2**(n+m).
    """
    M = _array(M, "oracle table")
    if M.ndim != 2:
        raise ShapeError("oracle needs a matrix")
    rows, cols = M.shape
    for d in (rows, cols):
        if not is_power_of_two(d):
            raise NonPowerOfTwo(f"oracle table dimension {d} is not a power of two")
    onehot = (M == 1).sum(axis=0) == 1
    exact = np.count_nonzero(M, axis=0) == 1
    bad = np.flatnonzero(~(onehot & exact))
    if len(bad):
        raise NotBasisColumns(f"column {int(bad[0])} of the oracle table is not a basis vector")
    values = np.argmax(M == 1, axis=0)
    size = rows * cols
    # column k = x*rows + y; f(x) < rows, so the XOR only touches the y bits
    k = np.arange(size)
    U = np.zeros((size, size), dtype=np.int64)
    U[k ^ np.repeat(values, rows), k] = 1
    return U


def outer(u, v) -> np.ndarray:
    """|u><v|: entries u_i * conj(v_j)."""
    u = _array(u, "left vector")
    v = _array(v, "right vector")
    if u.ndim != 1 or v.ndim != 1 or u.shape != v.shape:
        raise ShapeError("outer needs two vectors of equal length")
    return np.outer(u, np.conj(v))


def qft_matrix(N: int) -> np.ndarray:
    """Unitary DFT matrix with entries exp(2*pi*i*j*k/N)/sqrt(N)."""
    if N < 1:
        raise ShapeError("N must be at least 1")
    k = np.arange(N)
    # reduce j*k mod N before exponentiating to keep the phases exact
    phase = np.outer(k, k) % N
    return np.exp(2j * math.pi * phase / N) / math.sqrt(N)


def factor_product_state(v, left_qubits: int, tol: float = 1e-9) -> Tuple[np.ndarray, np.ndarray]:
    """Split a product state into (left, right) factors; raise if entangled."""
    from .errors import EntanglementError

    v = _array(v, "state").astype(complex)
    n = qubits_for(v.shape[0])
    if not 1 <= left_qubits < n:
        raise DimensionMismatch(f"cannot split {n} qubit(s) after {left_qubits}")
    mat = v.reshape(2 ** left_qubits, 2 ** (n - left_qubits))
    U, s, Vh = np.linalg.svd(mat)
    if len(s) > 1 and s[1] > tol:
        raise EntanglementError("state is entangled and cannot be split into a tensor pair")
    left, right = U[:, 0] * s[0], Vh[0, :]
    # fix the free global phase: the largest entry of the right factor is real positive
    k = int(np.argmax(np.abs(right)))
    phase = right[k] / abs(right[k])
    return left * phase, right / phase
