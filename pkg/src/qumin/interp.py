"""Tree-walking evaluator for Qumin, with the quantum-routine runtime bridge.

Running a program follows three phases: every ``--qload`` directive is
typechecked and installed first (any type error aborts before classical code
runs), then ``--load`` libraries are evaluated, then the remaining top-level
expressions run in order. Calls into a typechecked routine validate their
arguments against constraints derived from the routine's signature.
"""

from __future__ import annotations

import math
import os
import sys
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np

from . import qcore
from . import syntax as S
from . import typesys as T
from .errors import (
    ArityError, ConstraintViolation, CyclicLoad, DivideByZero, ModuleNotFound, QuminError,
    RecursionLimit, RuntimeFault, ShapeError, TypeErrorDynamic,
)
from .values import (
    Builtin, Closure, Environment, describe, is_callable_value, is_number, show, to_value,
    values_equal,
)

SOURCE_SUFFIX = ".qum"
PATH_ENV = "QUMIN_PATH"
DEFAULT_MAX_DEPTH = 10_000
CONSTRAINT_TOL = 1e-6

_STACK_BYTES = 512 * 1024 * 1024
# each Qumin call costs a handful of Python frames
_PY_RECURSION = 40 * DEFAULT_MAX_DEPTH + 10_000
_deep = threading.local()


def run_deep(fn: Callable[..., Any], *args: Any) -> Any:
    """Run ``fn`` on a thread with a large C stack so deep recursion cannot crash."""
    if getattr(_deep, "active", False):
        return fn(*args)
    box: Dict[str, Any] = {}

    def target() -> None:
        _deep.active = True
        try:
            box["value"] = fn(*args)
        except BaseException as exc:  # re-raised on the caller's thread
            box["error"] = exc

    old = threading.stack_size(_STACK_BYTES)
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, _PY_RECURSION))
    try:
        worker = threading.Thread(target=target, name="qumin-eval")
        worker.start()
        worker.join()
    finally:
        threading.stack_size(old)
        sys.setrecursionlimit(old_limit)
    if "error" in box:
        raise box["error"]
    return box.get("value")


# ---------------------------------------------------------------------------
# runtime constraints


@dataclass(frozen=True)
class RuntimeConstraint:
    """Shape predicate a classical argument must meet to enter a routine."""

    expected: T.LinearType
    description: str

    def violation(self, value: Any) -> Optional[str]:
        """None when ``value`` is acceptable, else a description of what was found."""
        return _violation(self.expected, value)


def _strip(t: T.LinearType) -> T.LinearType:
    while isinstance(t, T.Bang):
        t = t.inner
    return t


def _describe_type(t: T.LinearType) -> str:
    t = _strip(t)
    if isinstance(t, T.IntType):
        return "an integer"
    if isinstance(t, T.ListType):
        return "a list of integers"
    if T.is_qubit_only(t):
        n = T.qubit_count(t)
        return f"a normalized vector of {2 ** n} numbers ({n} qubit(s))"
    if isinstance(t, T.Lolli) and _is_operator(t):
        n = T.qubit_count(t.arg)
        return f"a {2 ** n}x{2 ** n} unitary matrix (operator on {n} qubit(s))"
    if isinstance(t, T.Lolli):
        return f"a function of type {t}"
    if isinstance(t, T.Tensor):
        return f"a pair ({_describe_type(t.left)}, {_describe_type(t.right)})"
    return str(t)


def _is_operator(t: T.Lolli) -> bool:
    return (T.is_qubit_only(t.arg) and T.is_qubit_only(t.result)
            and T.qubit_count(t.arg) == T.qubit_count(t.result))


def _numeric_vector(value: Any) -> Optional[np.ndarray]:
    if not isinstance(value, list) or not all(is_number(x) for x in value):
        return None
    return np.asarray(value, dtype=complex)


def _numeric_matrix(value: Any) -> Optional[np.ndarray]:
    if not isinstance(value, list) or not value:
        return None
    if not all(isinstance(r, list) and all(is_number(x) for x in r) for r in value):
        return None
    if len({len(r) for r in value}) != 1:
        return None
    return np.asarray(value, dtype=complex)


def _violation(t: T.LinearType, value: Any) -> Optional[str]:
    t = _strip(t)
    found = describe(value)
    if isinstance(t, T.IntType):
        return None if isinstance(value, int) and not isinstance(value, bool) else found
    if isinstance(t, T.ListType):
        ok = isinstance(value, list) and all(
            isinstance(x, int) and not isinstance(x, bool) for x in value)
        return None if ok else found
    if T.is_qubit_only(t):
        n = T.qubit_count(t)
        vec = _numeric_vector(value)
        if vec is None:
            return found
        if len(vec) != 2 ** n:
            return f"{found} (length must be {2 ** n})"
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > CONSTRAINT_TOL:
            return f"{found} with norm {norm:.6g}"
        return None
    if isinstance(t, T.Lolli):
        if _is_operator(t):
            n = T.qubit_count(t.arg)
            mat = _numeric_matrix(value)
            if mat is None:
                return found
            if mat.shape != (2 ** n, 2 ** n):
                return found
            if not qcore.is_unitary(mat, CONSTRAINT_TOL):
                return f"{found} that is not unitary"
            return None
        return None if is_callable_value(value) else found
    if isinstance(t, T.Tensor):
        if not isinstance(value, list) or len(value) != 2:
            return found
        return _violation(t.left, value[0]) or _violation(t.right, value[1])
    return found


def constraints_for(sig: T.RoutineSignature) -> List[RuntimeConstraint]:
    return [RuntimeConstraint(t, _describe_type(t)) for t in sig.params]


def check_constraints(sig: T.RoutineSignature, args: Sequence[Any], offset: int = 0) -> None:
    """Validate a prefix of a routine's arguments, starting at parameter ``offset``."""
    if offset + len(args) > len(sig.params):
        raise ArityError(f"'{sig.name}' takes {len(sig.params)} argument(s)")
    for i, value in enumerate(args, start=offset):
        constraint = RuntimeConstraint(sig.params[i], _describe_type(sig.params[i]))
        problem = constraint.violation(value)
        if problem is not None:
            raise ConstraintViolation(i + 1, constraint.description, problem, sig.name)


# ---------------------------------------------------------------------------
# the interpreter


def _attach_origin(err: QuminError, origin) -> None:
    if getattr(err, "origin", None) is None:
        err.origin = origin


class Interpreter:
    """One interpreter instance: global scope, module cache, RNG and output sink."""

    def __init__(self, seed: Optional[int] = None, out: Optional[Callable[[str], Any]] = None,
                 search_path: Iterable[os.PathLike] = (), max_depth: int = DEFAULT_MAX_DEPTH,
                 on_measure: Optional[Callable[[qcore.MeasurementReport], Any]] = None):
        self.rng = qcore.make_rng(seed)
        self.out = out if out is not None else sys.stdout.write
        # optional observer receiving every measurement report unrounded
        self.on_measure = on_measure
        self.search_path: List[Path] = [Path(p) for p in search_path]
        env_path = os.environ.get(PATH_ENV, "")
        self.search_path += [Path(p) for p in env_path.split(os.pathsep) if p]
        self.max_depth = max_depth
        self.depth = 0
        self.builtins = Environment()
        for b in _make_builtins(self):
            self.builtins.define(b.name, b)
        self.builtins.define("pi", math.pi)
        self.globals = Environment(self.builtins)
        self.signatures: Dict[str, T.RoutineSignature] = {}
        self.loaded: set = set()
        self._loading: List[str] = []
        self._splits: Dict[int, int] = {}
        self._origin = ("<input>", "")

    def reseed(self, seed: Optional[int]) -> None:
        self.rng = qcore.make_rng(seed)

    def report(self, report: qcore.MeasurementReport) -> None:
        self.out(report.render())
        if self.on_measure is not None:
            self.on_measure(report)

    # -- public entry points ---------------------------------------------------

    def run_source(self, source: str, filename: str = "<input>") -> Any:
        """Parse and run a whole program; returns the value of its last expression."""
        return run_deep(self._run_source, source, filename)

    def run_file(self, path: os.PathLike) -> Any:
        path = Path(path)
        try:
            source = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ModuleNotFound(f"cannot read {path}: {exc.strerror}") from exc
        if path.parent not in self.search_path:
            self.search_path.insert(0, path.parent)
        return self.run_source(source, str(path))

    def eval_source(self, source: str, filename: str = "<repl>") -> Any:
        """Evaluate one expression in the global scope (REPL entry point)."""
        def go():
            node = self._parse(lambda: S.parse_expr(source), (filename, source))
            return self._top(node, (filename, source))
        return run_deep(go)

    def load_module(self, name: str, quantum: bool = False) -> None:
        run_deep(self._load_module, name, quantum, None)

    def call(self, fn: Any, *args: Any) -> Any:
        """Apply a Qumin value to Python-side arguments."""
        return run_deep(self.apply, fn, list(args), None)

    # -- program execution ---------------------------------------------------

    def _parse(self, thunk, origin):
        try:
            return thunk()
        except QuminError as err:
            _attach_origin(err, origin)
            raise

    def _run_source(self, source: str, filename: str) -> Any:
        origin = (filename, source)
        nodes = self._parse(lambda: S.parse_program(source), origin)
        # static phase: quantum libraries are checked before anything runs
        for node in nodes:
            if isinstance(node, S.Load) and node.quantum:
                self._top(node, origin)
        for node in nodes:
            if isinstance(node, S.Load) and not node.quantum:
                self._top(node, origin)
        value = None
        for node in nodes:
            if not isinstance(node, S.Load):
                value = self._top(node, origin)
        return value

    def _top(self, node: S.Node, origin) -> Any:
        previous = self._origin
        self._origin = origin
        try:
            return self.eval(node, self.globals)
        except QuminError as err:
            _attach_origin(err, origin)
            raise
        finally:
            self._origin = previous

    # -- modules ---------------------------------------------------------------

    def resolve_module(self, name: str) -> Path:
        filename = name if name.endswith(SOURCE_SUFFIX) else name + SOURCE_SUFFIX
        dirs = self.search_path or [Path.cwd()]
        for d in dirs:
            candidate = d / filename
            if candidate.is_file():
                return candidate
        where = ", ".join(str(d) for d in dirs)
        raise ModuleNotFound(f"module '{name}' not found (searched: {where})")

    def _load_module(self, name: str, quantum: bool, span) -> None:
        if name in self.loaded:
            return
        if name in self._loading:
            chain = " -> ".join(self._loading + [name])
            raise CyclicLoad(f"cyclic module load: {chain}", span)
        try:
            path = self.resolve_module(name)
        except ModuleNotFound as err:
            err.span = span
            raise
        source = path.read_text(encoding="utf-8")
        origin = (str(path), source)
        self._loading.append(name)
        try:
            nodes = self._parse(lambda: S.parse_program(source), origin)
            if quantum:
                self._install_quantum(nodes, origin)
            else:
                for node in nodes:
                    self._top(node, origin)
        finally:
            self._loading.pop()
        self.loaded.add(name)

    def check_library(self, source: str, filename: str = "<input>") -> Dict[str, T.RoutineSignature]:
        """Typecheck a quantum library (and its ``--qload`` dependencies) and install it."""
        origin = (filename, source)

        def go():
            nodes = self._parse(lambda: S.parse_program(source), origin)
            return self._install_quantum(nodes, origin)
        return run_deep(go)

    def _install_quantum(self, nodes: Sequence[S.Node], origin) -> Dict[str, T.RoutineSignature]:
        for node in nodes:
            if isinstance(node, S.Load):
                if not node.quantum:
                    raise _with_origin(RuntimeFault(
                        "a quantum library may only --qload other quantum libraries",
                        node.span), origin)
                self._top(node, origin)
        known = {k: sig.as_type() for k, sig in self.signatures.items()}
        try:
            table = T.check_quantum_library(nodes, known)
        except QuminError as err:
            _attach_origin(err, origin)
            raise
        for node in nodes:
            if isinstance(node, S.Assignment):
                sig = table[node.name]
                lam = node.expr
                closure = Closure(tuple(p.name for p in lam.params), lam.body, self.globals,
                                  signature=sig, name=node.name, origin=origin)
                try:
                    self.globals.define(node.name, closure, node.span)
                except QuminError as err:
                    _attach_origin(err, origin)
                    raise
                self.signatures[node.name] = sig
                self._splits.update(sig.splits)
        return table

    # -- evaluation ------------------------------------------------------------

    def eval(self, node: S.Node, env: Environment) -> Any:
        kind = type(node)
        if kind is S.IntLit or kind is S.FloatLit or kind is S.BoolLit or kind is S.StringLit:
            return node.value
        if kind is S.Name:
            return env.lookup(node.id, node.span)
        if kind is S.ComplexLit:
            return complex(node.re, node.im)
        if kind is S.ListLit:
            return [self.eval(e, env) for e in node.elems]
        if kind is S.Call:
            fn = self.eval(node.callee, env)
            args = [self.eval(a, env) for a in node.args]
            return self.apply(fn, args, node.span)
        if kind is S.InfixCall:
            lhs = self.eval(node.lhs, env)
            fn = env.lookup(node.op, node.span)
            rhs = self.eval(node.rhs, env)
            return self.apply(fn, [lhs, rhs], node.span)
        if kind is S.PrefixCall:
            fn = env.lookup(node.op, node.span)
            return self.apply(fn, [self.eval(node.arg, env)], node.span)
        if kind is S.Composition:
            fns = [env.lookup(n, node.span) for n in node.names]
            value = self.apply(fns[-1], [self.eval(a, env) for a in node.args], node.span)
            for fn in reversed(fns[:-1]):
                value = self.apply(fn, [value], node.span)
            return value
        if kind is S.IfElse:
            cond = self.eval(node.cond, env)
            if not isinstance(cond, bool):
                raise TypeErrorDynamic(f"if condition must be a boolean, got {describe(cond)}",
                                       node.cond.span)
            return self.eval_body(node.then_body if cond else node.else_body,
                                  Environment(env), node.span)
        if kind is S.Lambda:
            closure = Closure(tuple(p.name for p in node.params), node.body, env,
                              origin=self._origin)
            if node.immediate_args is not None:
                args = [self.eval(a, env) for a in node.immediate_args]
                return self.apply(closure, args, node.span)
            return closure
        if kind is S.Assignment:
            value = self.eval(node.expr, env)
            if isinstance(value, Closure) and value.name is None and not value.bound:
                value.name = node.name
            env.define(node.name, value, node.span)
            return value
        if kind is S.TensorLet:
            value = self.eval(node.expr, env)
            width = self._splits.get(id(node))
            if width is None:
                width = _width_of(node.left_type)
            try:
                left, right = qcore.factor_product_state(value, width)
            except QuminError as err:
                err.span = err.span or node.span
                raise
            env.define(node.left, to_value(left), node.span)
            env.define(node.right, to_value(right), node.span)
            return value
        if kind is S.BangLet:
            value = self.eval(node.expr, env)
            env.define(node.name, value, node.span)
            return value
        if kind is S.Promote:
            return self.eval(node.expr, env)
        if kind is S.Load:
            self._load_module(node.name, node.quantum, node.span)
            return None
        raise TypeErrorDynamic(f"cannot evaluate {kind.__name__}", node.span)

    def eval_body(self, nodes: Sequence[S.Node], env: Environment, span=None) -> Any:
        if not nodes:
            raise RuntimeFault("empty body has no value", span)
        value = None
        for node in nodes:
            value = self.eval(node, env)
        return value

    def apply(self, fn: Any, args: List[Any], span=None) -> Any:
        try:
            return self._apply(fn, args)
        except QuminError as err:
            if err.span is None:
                err.span = span
            raise

    def _apply(self, fn: Any, args: List[Any]) -> Any:
        if isinstance(fn, Closure):
            remaining = len(fn.params) - len(fn.bound)
            if len(args) > remaining:
                label = fn.name or "lambda"
                raise ArityError(f"{label} expects {remaining} more argument(s), got {len(args)}")
            if fn.signature is not None:
                check_constraints(fn.signature, args, len(fn.bound))
            if len(args) < remaining:
                return Closure(fn.params, fn.body, fn.env, fn.signature,
                               fn.bound + tuple(args), fn.name, fn.origin)
            return self._enter(fn, fn.bound + tuple(args))
        if isinstance(fn, Builtin):
            if len(args) > fn.remaining:
                raise ArityError(f"{fn.name} expects {fn.remaining} argument(s), got {len(args)}")
            if len(args) < fn.remaining:
                return Builtin(fn.name, fn.arity, fn.fn, fn.bound + tuple(args))
            return fn.fn(*fn.bound, *args)
        if isinstance(fn, list) and len(args) == 1:
            # a matrix used as a function applies itself
            return to_value(qcore.apply(fn, args[0]))
        raise TypeErrorDynamic(f"{describe(fn)} is not callable")

    def _enter(self, fn: Closure, args: Sequence[Any]) -> Any:
        if self.depth >= self.max_depth:
            raise RecursionLimit(f"recursion deeper than {self.max_depth} calls")
        env = Environment(fn.env)
        for name, value in zip(fn.params, args):
            env.vars[name] = value
        self.depth += 1
        previous = self._origin
        if fn.origin is not None:
            self._origin = fn.origin
        try:
            return self.eval_body(fn.body, env)
        except QuminError as err:
            if fn.origin is not None:
                _attach_origin(err, fn.origin)
            raise
        finally:
            self.depth -= 1
            self._origin = previous


def _with_origin(err: QuminError, origin) -> QuminError:
    _attach_origin(err, origin)
    return err


def _width_of(ann: Optional[S.TypeAnnotation]) -> int:
    if ann is None:
        return 1
    t = T.desugar_annotation(ann)
    return T.qubit_count(t) if T.is_qubit_only(t) else 1


# ---------------------------------------------------------------------------
# builtins


def _num(x: Any, who: str) -> Any:
    if not is_number(x):
        raise TypeErrorDynamic(f"{who} expects numbers, got {describe(x)}")
    return x


def _as_array(x: Any, who: str) -> np.ndarray:
    if is_number(x):
        return np.asarray(x)
    if not isinstance(x, list):
        raise TypeErrorDynamic(f"{who} expects numbers or numeric lists, got {describe(x)}")
    try:
        arr = np.asarray(x)
    except ValueError:
        raise ShapeError(f"{who}: ragged nested list") from None
    if arr.dtype == object or arr.dtype.kind not in "iufc":
        raise TypeErrorDynamic(f"{who} expects numeric lists")
    return arr


def _arith(name: str, op: Callable[[Any, Any], Any]) -> Callable[[Any, Any], Any]:
    def fn(a: Any, b: Any) -> Any:
        if isinstance(a, list) or isinstance(b, list):
            x, y = _as_array(a, name), _as_array(b, name)
            if x.ndim and y.ndim and x.shape != y.shape:
                raise ShapeError(f"{name}: shapes {x.shape} and {y.shape} differ")
            if name == "/" and np.any(y == 0):
                raise DivideByZero("division by zero")
            return to_value(op(x, y))
        _num(a, name)
        _num(b, name)
        if name == "/" and b == 0:
            raise DivideByZero("division by zero")
        return op(a, b)
    return fn


def _seq(x: Any, who: str) -> list:
    if not isinstance(x, list):
        raise TypeErrorDynamic(f"{who} expects a list, got {describe(x)}")
    return x


def _car(xs: Any) -> Any:
    xs = _seq(xs, "car")
    if not xs:
        raise TypeErrorDynamic("car of an empty list")
    return xs[0]


def _cdr(xs: Any) -> Any:
    xs = _seq(xs, "cdr")
    if not xs:
        raise TypeErrorDynamic("cdr of an empty list")
    return xs[1:]


def _length(xs: Any) -> int:
    if isinstance(xs, (list, str)):
        return len(xs)
    raise TypeErrorDynamic(f"length expects a list, got {describe(xs)}")


def _exp(x: Any) -> Any:
    _num(x, "exp")
    return math.exp(x) if not isinstance(x, complex) else complex(np.exp(x))


def _sqrt(x: Any) -> Any:
    _num(x, "sqrt")
    if isinstance(x, complex) or x < 0:
        return complex(np.sqrt(complex(x)))
    return math.sqrt(x)


def _log_two(x: Any) -> Any:
    _num(x, "logTwo")
    if isinstance(x, complex) or x <= 0:
        raise TypeErrorDynamic(f"logTwo expects a positive real, got {show(x)}")
    if isinstance(x, int) and qcore.is_power_of_two(x):
        return x.bit_length() - 1
    return math.log2(x)


def _to_int(x: Any) -> int:
    _num(x, "toInt")
    if isinstance(x, complex):
        raise TypeErrorDynamic("toInt of a complex number")
    return int(x)  # truncates toward zero


def _make_builtins(interp: Interpreter) -> List[Builtin]:
    call = interp.apply

    def fold(f: Any, xs: Any) -> Any:
        xs = _seq(xs, "fold")
        if not xs:
            raise TypeErrorDynamic("fold of an empty list")
        acc = xs[0]
        for x in xs[1:]:
            acc = call(f, [acc, x])
        return acc

    def apply_(U: Any, v: Any) -> Any:
        if is_callable_value(U):
            return call(U, [v])
        return to_value(qcore.apply(U, v))

    def measure(v: Any) -> Any:
        state, report = qcore.measure(v, interp.rng)
        interp.report(report)
        return to_value(state)

    def subsystems(v: Any, config: Any) -> Any:
        state, report = qcore.subsystems(v, _seq(config, "subsystems"), interp.rng)
        interp.report(report)
        return to_value(state)

    def generate_matrix(f: Any, dim: Any) -> Any:
        if not isinstance(dim, int) or isinstance(dim, bool):
            raise TypeErrorDynamic(f"generateMatrix dimension must be an integer, got {describe(dim)}")
        return to_value(qcore.generate_matrix(lambda e: call(f, [e]), dim))

    def apply_n(U: Any, v: Any, times: Any) -> Any:
        if not isinstance(times, int) or isinstance(times, bool):
            raise TypeErrorDynamic(f"applyN count must be an integer, got {describe(times)}")
        if is_callable_value(U):
            if times < 0:
                return to_value(qcore.apply_n([[1]], [1], times))  # raises NegativeCount
            for _ in range(times):
                v = call(U, [v])
            return v
        return to_value(qcore.apply_n(U, v, times))

    def print_(x: Any) -> Any:
        interp.out((x if isinstance(x, str) else show(x)) + "\n")
        return x

    table = [
        Builtin("+", 2, _arith("+", lambda a, b: a + b)),
        Builtin("-", 2, _arith("-", lambda a, b: a - b)),
        Builtin("*", 2, _arith("*", lambda a, b: a * b)),
        Builtin("/", 2, _arith("/", lambda a, b: a / b)),
        Builtin("=", 2, values_equal),
        Builtin("apply", 2, apply_),
        Builtin("·", 2, apply_),
        Builtin("tensor", 2, lambda a, b: to_value(qcore.tensor(a, b))),
        Builtin("⊗", 2, lambda a, b: to_value(qcore.tensor(a, b))),
        Builtin("tensorOp", 2, lambda a, b: to_value(qcore.tensor_op(a, b))),
        Builtin("applyN", 3, apply_n),
        Builtin("measure", 1, measure),
        Builtin("subsystems", 2, subsystems),
        Builtin("oracle", 1, lambda m: to_value(qcore.oracle(m))),
        Builtin("generateMatrix", 2, generate_matrix),
        Builtin("outer", 2, lambda u, v: to_value(qcore.outer(u, v))),
        Builtin("car", 1, _car),
        Builtin("cdr", 1, _cdr),
        # append conses onto the front, prepend adds at the back
        Builtin("append", 2, lambda x, xs: [x] + _seq(xs, "append")),
        Builtin("prepend", 2, lambda x, xs: _seq(xs, "prepend") + [x]),
        Builtin("length", 1, _length),
        Builtin("len", 1, _length),
        Builtin("exp", 1, _exp),
        Builtin("sqrt", 1, _sqrt),
        Builtin("fold", 2, fold),
        Builtin("logTwo", 1, _log_two),
        Builtin("toInt", 1, _to_int),
        Builtin("print", 1, print_),
    ]
    return table


def builtins(interp: Optional[Interpreter] = None) -> Environment:
    """A fresh root environment holding every builtin."""
    return (interp or Interpreter()).builtins
