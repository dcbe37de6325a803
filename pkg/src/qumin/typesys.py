"""Linear typechecker for Qumin's quantum fragment.

Types are those of the multiplicative-exponential fragment: ``qubit``,
``int``, ``list``, tensor, linear arrow and bang. Qubit registers are
written ``QubitPow(n)``; ``QUBIT`` is ``QubitPow(1)``. The dimension ``n``
is either a literal or a scheme variable (the primitives are polymorphic in
register width).

Checking is algorithmic: a term is checked against an input context and
yields an output context in which the linear variables it used are marked
consumed, so sibling premises only see what is left. Unrestricted variables
(banged values, ints and lists) live in a separate map and are never
consumed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

from . import syntax as S
from .errors import (
    DimMismatch, LinearityViolation, PromotionError, TypeCheckError, TypeMismatch,
    UnknownName, UnsupportedTerm,
)

# ---------------------------------------------------------------------------
# dimensions


@dataclass(frozen=True)
class DimVar:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class DimSum:
    parts: Tuple["DimExpr", ...]

    def __str__(self) -> str:
        return " + ".join(str(p) for p in self.parts)


DimExpr = Union[int, DimVar, DimSum]


def dim_add(a: DimExpr, b: DimExpr) -> DimExpr:
    if isinstance(a, int) and isinstance(b, int):
        return a + b
    parts = []
    for d in (a, b):
        parts.extend(d.parts if isinstance(d, DimSum) else (d,))
    return _dim_simplify(parts)


def _dim_simplify(parts: Iterable[DimExpr]) -> DimExpr:
    const = 0
    rest = []
    for p in parts:
        if isinstance(p, int):
            const += p
        elif isinstance(p, DimSum):
            inner = _dim_simplify(p.parts)
            if isinstance(inner, int):
                const += inner
            else:
                rest.extend(inner.parts if isinstance(inner, DimSum) else (inner,))
        else:
            rest.append(p)
    if not rest:
        return const
    if const:
        rest.append(const)
    return rest[0] if len(rest) == 1 else DimSum(tuple(rest))


# ---------------------------------------------------------------------------
# types


class LinearType:
    __slots__ = ()


@dataclass(frozen=True)
class IntType(LinearType):
    def __str__(self) -> str:
        return "int"


@dataclass(frozen=True)
class ListType(LinearType):
    def __str__(self) -> str:
        return "list"


@dataclass(frozen=True)
class QubitPow(LinearType):
    dim: DimExpr

    def __str__(self) -> str:
        return "qubit" if self.dim == 1 else f"qubit^{self.dim}"


@dataclass(frozen=True)
class Tensor(LinearType):
    left: LinearType
    right: LinearType

    def __str__(self) -> str:
        right = f"({self.right})" if isinstance(self.right, (Tensor, Lolli)) else str(self.right)
        left = f"({self.left})" if isinstance(self.left, Lolli) else str(self.left)
        return f"{left} ⊗ {right}"


@dataclass(frozen=True)
class Lolli(LinearType):
    arg: LinearType
    result: LinearType

    def __str__(self) -> str:
        arg = f"({self.arg})" if isinstance(self.arg, Lolli) else str(self.arg)
        return f"{arg} ⊸ {self.result}"


@dataclass(frozen=True)
class Bang(LinearType):
    inner: LinearType

    def __str__(self) -> str:
        inner = str(self.inner)
        return f"!{inner}" if isinstance(self.inner, (QubitPow, IntType, ListType, Bang)) \
            else f"!({inner})"


QUBIT = QubitPow(1)
INT = IntType()
LIST = ListType()


def operator_type(n: DimExpr) -> Lolli:
    return Lolli(QubitPow(n), QubitPow(n))


def is_qubit_only(t: LinearType) -> bool:
    if isinstance(t, QubitPow):
        return True
    if isinstance(t, Tensor):
        return is_qubit_only(t.left) and is_qubit_only(t.right)
    return False


def qubit_count(t: LinearType) -> DimExpr:
    """Total register width of a qubit-only type."""
    if isinstance(t, QubitPow):
        return t.dim
    if isinstance(t, Tensor):
        return dim_add(qubit_count(t.left), qubit_count(t.right))
    raise ValueError(f"{t} is not a qubit register type")


def normalize(t: LinearType) -> LinearType:
    """Canonical form used for equivalence: flattened registers, no double bangs."""
    if isinstance(t, Bang):
        inner = normalize(t.inner)
        return inner if isinstance(inner, Bang) else Bang(inner)
    if is_qubit_only(t):
        return QubitPow(_dim_simplify((qubit_count(t),)))
    if isinstance(t, Tensor):
        return Tensor(normalize(t.left), normalize(t.right))
    if isinstance(t, Lolli):
        return Lolli(normalize(t.arg), normalize(t.result))
    return t


def equivalent(a: LinearType, b: LinearType) -> bool:
    return normalize(a) == normalize(b)


def is_unrestricted(t: LinearType) -> bool:
    return isinstance(t, (Bang, IntType, ListType))


def _dim_vars(d: DimExpr) -> set:
    if isinstance(d, DimVar):
        return {d.name}
    if isinstance(d, DimSum):
        return set().union(*(_dim_vars(p) for p in d.parts))
    return set()


def free_dim_vars(t: LinearType) -> set:
    if isinstance(t, QubitPow):
        return _dim_vars(t.dim)
    if isinstance(t, (Tensor,)):
        return free_dim_vars(t.left) | free_dim_vars(t.right)
    if isinstance(t, Lolli):
        return free_dim_vars(t.arg) | free_dim_vars(t.result)
    if isinstance(t, Bang):
        return free_dim_vars(t.inner)
    return set()


# ---------------------------------------------------------------------------
# surface annotations


def desugar_annotation(ann: S.TypeAnnotation) -> LinearType:
    """Map a surface type to a LinearType; ``operator[n]`` becomes an endo-arrow."""
    if isinstance(ann, S.QubitAnn):
        return QUBIT
    if isinstance(ann, S.IntAnn):
        return INT
    if isinstance(ann, S.ListAnn):
        return LIST
    if isinstance(ann, S.OperatorAnn):
        return operator_type(ann.qubits)
    if isinstance(ann, S.TensorAnn):
        return Tensor(desugar_annotation(ann.left), desugar_annotation(ann.right))
    if isinstance(ann, S.ArrowAnn):
        return Lolli(desugar_annotation(ann.arg), desugar_annotation(ann.result))
    if isinstance(ann, S.BangAnn):
        return Bang(desugar_annotation(ann.inner))
    raise TypeError(f"not a type annotation: {ann!r}")


# ---------------------------------------------------------------------------
# primitive signature schemes

_n, _m = DimVar("n"), DimVar("m")
_Qn, _Qm = QubitPow(_n), QubitPow(_m)

SCHEMES: Dict[str, LinearType] = {
    "apply": Lolli(operator_type(_n), Lolli(_Qn, _Qn)),
    # generalised to registers; the single-qubit form is n = m = 1
    "tensor": Lolli(_Qn, Lolli(_Qm, Tensor(_Qn, _Qm))),
    "applyN": Lolli(operator_type(_n), Lolli(_Qn, Lolli(INT, _Qn))),
    "measure": Lolli(_Qn, Bang(_Qn)),
    "tensorOp": Lolli(operator_type(_n), Lolli(operator_type(_m),
                                               Lolli(Tensor(_Qn, _Qm), Tensor(_Qn, _Qm)))),
    "subsystems": Lolli(_Qn, Lolli(LIST, Bang(_Qn))),
}
SCHEMES["·"] = SCHEMES["apply"]
SCHEMES["⊗"] = SCHEMES["tensor"]

_SCHEME_VARS = {name: sorted(free_dim_vars(t)) for name, t in SCHEMES.items()}


def _subst_dim(d: DimExpr, env: Mapping[str, DimExpr]) -> DimExpr:
    if isinstance(d, DimVar):
        if d.name in env:
            return _subst_dim(env[d.name], env)
        return d
    if isinstance(d, DimSum):
        return _dim_simplify(_subst_dim(p, env) for p in d.parts)
    return d


def substitute(t: LinearType, env: Mapping[str, DimExpr]) -> LinearType:
    if isinstance(t, QubitPow):
        return QubitPow(_subst_dim(t.dim, env))
    if isinstance(t, Tensor):
        return Tensor(substitute(t.left, env), substitute(t.right, env))
    if isinstance(t, Lolli):
        return Lolli(substitute(t.arg, env), substitute(t.result, env))
    if isinstance(t, Bang):
        return Bang(substitute(t.inner, env))
    return t


def instantiate_scheme(prim: str, arg_dims: Sequence[int]) -> LinearType:
    """Close a primitive's scheme with literal widths, in variable order (n, m)."""
    if prim not in SCHEMES:
        raise KeyError(f"no primitive named {prim!r}")
    names = _SCHEME_VARS[prim]
    if len(arg_dims) != len(names):
        raise DimMismatch(f"{len(names)} dimension(s) for {prim}", f"{len(arg_dims)}",
                          rule="scheme")
    env = {}
    for name, d in zip(names, arg_dims):
        if not isinstance(d, int) or d < 1:
            raise DimMismatch("a literal dimension >= 1", d, rule="scheme")
        env[name] = d
    return substitute(SCHEMES[prim], env)


# ---------------------------------------------------------------------------
# contexts and signatures


@dataclass(frozen=True)
class TypingContext:
    """Unrestricted (gamma) and linear (delta) variable maps.

    ``delta`` maps a name to ``(type, consumed)``. Operations return new
    contexts; nothing is mutated in place.
    """

    gamma: Mapping[str, LinearType] = field(default_factory=dict)
    delta: Mapping[str, Tuple[LinearType, bool]] = field(default_factory=dict)

    def bind(self, name: str, t: LinearType, unrestricted: bool = False) -> "TypingContext":
        gamma = dict(self.gamma)
        delta = dict(self.delta)
        gamma.pop(name, None)
        delta.pop(name, None)
        if unrestricted or is_unrestricted(t):
            gamma[name] = t
        else:
            delta[name] = (t, False)
        return TypingContext(gamma, delta)

    def consume(self, name: str) -> "TypingContext":
        delta = dict(self.delta)
        delta[name] = (delta[name][0], True)
        return TypingContext(self.gamma, delta)

    def restore(self, name: str, outer: "TypingContext") -> "TypingContext":
        """Drop ``name``'s inner binding, reinstating whatever ``outer`` had."""
        gamma = dict(self.gamma)
        delta = dict(self.delta)
        gamma.pop(name, None)
        delta.pop(name, None)
        if name in outer.gamma:
            gamma[name] = outer.gamma[name]
        if name in outer.delta:
            delta[name] = outer.delta[name]
        return TypingContext(gamma, delta)

    def consumed(self) -> frozenset:
        return frozenset(k for k, (_, used) in self.delta.items() if used)


@dataclass(frozen=True)
class RoutineSignature:
    name: str
    params: Tuple[LinearType, ...]
    result: LinearType
    param_names: Tuple[str, ...] = ()
    # id(TensorLet node) -> qubit width of the left component, for runtime splitting
    splits: Mapping[int, int] = field(default_factory=dict, compare=False, repr=False)

    def as_type(self) -> LinearType:
        t = self.result
        for p in reversed(self.params):
            t = Lolli(p, t)
        return t

    def __str__(self) -> str:
        return f"{self.name} : {self.as_type()}"


# ---------------------------------------------------------------------------
# use counting (for error reports)


def count_uses(nodes: Sequence[S.Node], name: str) -> int:
    """Syntactic occurrences of ``name`` in a body, honouring shadowing."""
    total = 0
    for node in nodes:
        if isinstance(node, S.Assignment):
            total += _count(node.expr, name)
            if node.name == name:
                return total
        elif isinstance(node, S.TensorLet):
            total += _count(node.expr, name)
            if name in (node.left, node.right):
                return total
        elif isinstance(node, S.BangLet):
            total += _count(node.expr, name)
            if node.name == name:
                return total
        else:
            total += _count(node, name)
    return total


def _count(node: S.Node, name: str) -> int:
    if isinstance(node, S.Name):
        return int(node.id == name)
    if isinstance(node, S.Lambda):
        inner = 0
        if name not in {p.name for p in node.params}:
            inner = count_uses(node.body, name)
        return inner + sum(_count(a, name) for a in node.immediate_args or ())
    if isinstance(node, (S.Assignment, S.TensorLet, S.BangLet)):
        return count_uses((node,), name)
    if isinstance(node, S.Call):
        return _count(node.callee, name) + sum(_count(a, name) for a in node.args)
    if isinstance(node, S.InfixCall):
        return int(node.op == name) + _count(node.lhs, name) + _count(node.rhs, name)
    if isinstance(node, S.PrefixCall):
        return int(node.op == name) + _count(node.arg, name)
    if isinstance(node, S.Composition):
        return node.names.count(name) + sum(_count(a, name) for a in node.args)
    if isinstance(node, S.IfElse):
        return (_count(node.cond, name) + count_uses(node.then_body, name)
                + count_uses(node.else_body, name))
    if isinstance(node, S.Promote):
        return _count(node.expr, name)
    if isinstance(node, S.ListLit):
        return sum(_count(e, name) for e in node.elems)
    return 0


# ---------------------------------------------------------------------------
# the checker


class _Checker:
    def __init__(self, routine: str, globals_: Mapping[str, LinearType]):
        self.routine = routine
        self.globals = globals_
        self.dims: Dict[str, DimExpr] = {}
        self.fresh = itertools.count()
        self.splits: Dict[int, int] = {}
        self.tensor_lets: list = []

    # -- unification -------------------------------------------------------------

    def resolve(self, t: LinearType) -> LinearType:
        return substitute(t, self.dims)

    def instantiate(self, t: LinearType) -> LinearType:
        names = free_dim_vars(t)
        if not names:
            return t
        k = next(self.fresh)
        return substitute(t, {v: DimVar(f"{v}{k}") for v in names})

    def _bind_dim(self, expected: DimExpr, found: DimExpr, span) -> bool:
        """Solve ``expected = found``; False when neither side can be pinned down."""
        e = _subst_dim(expected, self.dims)
        f = _subst_dim(found, self.dims)
        if e == f:
            return True
        for a, b in ((e, f), (f, e)):
            unknown = sorted(_dim_vars(a))
            if len(unknown) == 1 and not _dim_vars(b) and isinstance(b, int):
                const = _subst_dim(a, {unknown[0]: 0})
                if not isinstance(const, int):
                    continue
                value = b - const
                if value < 1:
                    raise DimMismatch(e, f, span, "scheme", self.routine)
                self.dims[unknown[0]] = value
                return True
        if isinstance(e, int) and isinstance(f, int):
            raise DimMismatch(e, f, span, "⊸E", self.routine)
        if isinstance(e, DimVar) and e.name not in _dim_vars(f):
            self.dims[e.name] = f
            return True
        if isinstance(f, DimVar) and f.name not in _dim_vars(e):
            self.dims[f.name] = e
            return True
        return False

    def unify(self, expected: LinearType, found: LinearType, span) -> None:
        e = self.resolve(expected)
        f = self.resolve(found)
        if isinstance(f, Bang) and not isinstance(e, Bang):
            # dereliction: a reusable value may stand in for a single use
            self.unify(e, f.inner, span)
            return
        if is_qubit_only(e) and is_qubit_only(f):
            if isinstance(e, Tensor) and isinstance(f, Tensor):
                ce, cf = qubit_count(e), qubit_count(f)
                if not (_dim_vars(ce) or _dim_vars(cf)) and ce != cf:
                    raise DimMismatch(e, f, span, "⊸E", self.routine)
                self.unify(e.left, f.left, span)
                self.unify(e.right, f.right, span)
                return
            if not self._bind_dim(qubit_count(e), qubit_count(f), span):
                raise DimMismatch(e, f, span, "⊸E", self.routine)
            return
        if type(e) is not type(f):
            raise TypeMismatch(e, f, span, "⊸E", self.routine)
        if isinstance(e, Tensor):
            self.unify(e.left, f.left, span)
            self.unify(e.right, f.right, span)
        elif isinstance(e, Lolli):
            self.unify(e.arg, f.arg, span)
            self.unify(e.result, f.result, span)
        elif isinstance(e, Bang):
            self.unify(_strip_bangs(e), _strip_bangs(f), span)

    # -- terms ---------------------------------------------------------------

    def synth(self, node: S.Node, ctx: TypingContext) -> Tuple[LinearType, TypingContext]:
        if isinstance(node, S.Name):
            return self.var(node.id, node.span, ctx)
        if isinstance(node, S.Call):
            t, ctx = self.synth(node.callee, ctx)
            return self.apply_args(t, node.args, ctx, node.span)
        if isinstance(node, S.InfixCall):
            t, ctx = self.synth(node.lhs, ctx)
            f, ctx = self.var(node.op, node.span, ctx)
            t2, ctx = self.synth(node.rhs, ctx)
            f = self.expect_arrow(f, node.span)
            self.unify(f.arg, t, node.lhs.span)
            f = self.expect_arrow(f.result, node.span)
            self.unify(f.arg, t2, node.rhs.span)
            return self.resolve(f.result), ctx
        if isinstance(node, S.PrefixCall):
            f, ctx = self.var(node.op, node.span, ctx)
            return self.apply_args(f, (node.arg,), ctx, node.span)
        if isinstance(node, S.Composition):
            fns = []
            for nm in node.names:
                f, ctx = self.var(nm, node.span, ctx)
                fns.append(f)
            t, ctx = self.apply_args(fns[-1], node.args, ctx, node.span)
            for f in reversed(fns[:-1]):
                f = self.expect_arrow(f, node.span)
                self.unify(f.arg, t, node.span)
                t = self.resolve(f.result)
            return t, ctx
        if isinstance(node, S.Lambda):
            t, ctx = self.lam(node, ctx)
            if node.immediate_args is not None:
                return self.apply_args(t, node.immediate_args, ctx, node.span)
            return t, ctx
        if isinstance(node, S.Promote):
            before = ctx.consumed()
            t, out = self.synth(node.expr, ctx)
            used = sorted(out.consumed() - before)
            if used:
                raise PromotionError(
                    f"cannot promote a term that consumes linear variable(s) {', '.join(used)}",
                    node.span, "!-I", self.routine)
            return Bang(self.resolve(t)), out
        if isinstance(node, S.IntLit):
            return INT, ctx
        if isinstance(node, S.ListLit):
            for elem in node.elems:
                t, ctx = self.synth(elem, ctx)
                self.unify(INT, t, elem.span)
            return LIST, ctx
        if isinstance(node, (S.Assignment, S.TensorLet, S.BangLet)):
            raise UnsupportedTerm("a let-binding must be followed by the expression it scopes over",
                                  node.span, "let", self.routine)
        what = type(node).__name__
        raise UnsupportedTerm(f"{what} is not part of the quantum fragment", node.span,
                              "syntax", self.routine)

    def var(self, name: str, span, ctx: TypingContext) -> Tuple[LinearType, TypingContext]:
        if name in ctx.delta:
            t, used = ctx.delta[name]
            if used:
                raise LinearityViolation(name, None, span, self.routine)
            return t, ctx.consume(name)
        if name in ctx.gamma:
            return ctx.gamma[name], ctx
        if name in self.globals:
            return self.instantiate(self.globals[name]), ctx
        if name in SCHEMES:
            return self.instantiate(SCHEMES[name]), ctx
        raise UnknownName(name, span, self.routine)

    def expect_arrow(self, t: LinearType, span) -> Lolli:
        t = self.resolve(t)
        while isinstance(t, Bang):
            t = t.inner
        if not isinstance(t, Lolli):
            raise TypeMismatch("a function", t, span, "⊸E", self.routine)
        return t

    def apply_args(self, f: LinearType, args: Sequence[S.Node], ctx: TypingContext,
                   span) -> Tuple[LinearType, TypingContext]:
        for arg in args:
            lolli = self.expect_arrow(f, span)
            t, ctx = self.synth(arg, ctx)
            self.unify(lolli.arg, t, arg.span)
            f = lolli.result
        return self.resolve(f), ctx

    def lam(self, node: S.Lambda, ctx: TypingContext) -> Tuple[LinearType, TypingContext]:
        if not node.annotated:
            missing = [p.name for p in node.params if p.annotation is None]
            raise UnsupportedTerm(
                f"parameter(s) {', '.join(missing)} need type annotations in the quantum fragment",
                node.span, "⊸I", self.routine)
        params = [(p.name, desugar_annotation(p.annotation)) for p in node.params]
        inner = ctx
        for name, t in params:
            inner = inner.bind(name, t)
        try:
            body_t, out = self.body(node.body, inner, node.span)
        except LinearityViolation as err:
            names = {n for n, _ in params}
            if err.used_count is None and err.name in names:
                raise err.with_count(count_uses(node.body, err.name)) from None
            raise
        for name, t in params:
            self.check_consumed(name, out, node.body, node.span)
        for name, _ in params:
            out = out.restore(name, ctx)
        result = body_t
        for _, t in reversed(params):
            result = Lolli(t, result)
        return result, out

    def check_consumed(self, name: str, ctx: TypingContext, scope: Sequence[S.Node], span) -> None:
        if name in ctx.delta and not ctx.delta[name][1]:
            raise LinearityViolation(name, count_uses(scope, name), span, self.routine)

    def body(self, nodes: Sequence[S.Node], ctx: TypingContext,
             span) -> Tuple[LinearType, TypingContext]:
        if not nodes:
            raise UnsupportedTerm("empty body", span, "syntax", self.routine)
        head, rest = nodes[0], nodes[1:]
        if isinstance(head, (S.Assignment, S.TensorLet, S.BangLet)):
            if not rest:
                raise UnsupportedTerm(
                    "a let-binding must be followed by the expression it scopes over",
                    head.span, "let", self.routine)
            t, ctx = self.synth(head.expr, ctx)
            t = self.resolve(t)
            binds = self.let_bindings(head, t)
            inner = ctx
            for name, bt in binds:
                # a name bound by let ! is reusable even though its type is unbanged
                inner = inner.bind(name, bt, unrestricted=isinstance(head, S.BangLet))
            try:
                result, out = self.body(rest, inner, span)
            except LinearityViolation as err:
                if err.used_count is None and err.name in {n for n, _ in binds}:
                    raise err.with_count(count_uses(rest, err.name)) from None
                raise
            for name, _ in binds:
                self.check_consumed(name, out, rest, head.span)
            for name, _ in binds:
                out = out.restore(name, ctx)
            return result, out
        t, ctx = self.synth(head, ctx)
        if not rest:
            return t, ctx
        t = self.resolve(t)
        if not is_unrestricted(t):
            raise TypeMismatch("a reusable (!) value in non-final position", t, head.span,
                               "weakening", self.routine)
        return self.body(rest, ctx, span)

    def let_bindings(self, head: S.Node, t: LinearType):
        if isinstance(head, S.Assignment):
            return [(head.name, t)]
        if isinstance(head, S.BangLet):
            if not isinstance(t, Bang):
                raise TypeMismatch("a !-typed value", t, head.span, "!-E", self.routine)
            return [(head.name, _strip_bangs(t))]
        # tensor elimination
        if isinstance(t, Bang):
            t = _strip_bangs(t)
        if head.left_type is not None:
            left = desugar_annotation(head.left_type)
            if not is_qubit_only(t) or not is_qubit_only(left):
                raise TypeMismatch("a qubit register", t, head.span, "⊗E", self.routine)
            total, width = qubit_count(t), qubit_count(left)
            if not isinstance(total, int) or not isinstance(width, int) or width >= total:
                raise DimMismatch(f"fewer than {total} qubits", left, head.span, "⊗E",
                                  self.routine)
            right: LinearType = QubitPow(total - width)
        elif isinstance(t, Tensor):
            left, right = t.left, t.right
        elif isinstance(t, QubitPow) and isinstance(t.dim, int) and t.dim >= 2:
            left, right = QUBIT, QubitPow(t.dim - 1)
        else:
            raise TypeMismatch("a tensor", t, head.span, "⊗E", self.routine)
        if is_qubit_only(left):
            width = qubit_count(left)
            self.tensor_lets.append((id(head), width))
        return [(head.left, left), (head.right, right)]


def _strip_bangs(t: LinearType) -> LinearType:
    while isinstance(t, Bang):
        t = t.inner
    return t


def check_routine(node: S.Node, globals_: Optional[Mapping[str, LinearType]] = None,
                  name: Optional[str] = None) -> RoutineSignature:
    """Check one annotated lambda (or ``let name = lambda...``) and return its signature."""
    if isinstance(node, S.Assignment):
        name = name or node.name
        node = node.expr
    name = name or "<lambda>"
    if not isinstance(node, S.Lambda):
        raise UnsupportedTerm("quantum definitions must be annotated lambdas",
                              node.span, "syntax", name)
    if node.immediate_args is not None:
        raise UnsupportedTerm("a routine definition cannot be applied immediately",
                              node.span, "syntax", name)
    checker = _Checker(name, dict(globals_ or {}))
    try:
        t, out = checker.lam(node, TypingContext())
    except TypeCheckError as err:
        if err.routine is None:
            err.routine = name
        raise
    params = []
    for _ in node.params:
        assert isinstance(t, Lolli)
        params.append(t.arg)
        t = t.result
    result = checker.resolve(t)
    leftover = free_dim_vars(result)
    if leftover:
        raise DimMismatch("fully determined register widths",
                          f"unresolved dimension(s) in {result}", node.span, "scheme", name)
    splits = {}
    for key, width in checker.tensor_lets:
        width = _subst_dim(width, checker.dims)
        if not isinstance(width, int):
            raise DimMismatch("a literal width", width, node.span, "⊗E", name)
        splits[key] = width
    return RoutineSignature(name, tuple(params), result, tuple(p.name for p in node.params),
                            splits)


def check_quantum_library(nodes: Sequence[S.Node],
                          globals_: Optional[Mapping[str, LinearType]] = None
                          ) -> Dict[str, RoutineSignature]:
    """Check every routine of a quantum library; the first failure aborts."""
    env = dict(globals_ or {})
    table: Dict[str, RoutineSignature] = {}
    for node in nodes:
        if isinstance(node, S.Load):
            continue
        if not isinstance(node, S.Assignment):
            raise UnsupportedTerm("only routine definitions may appear in a quantum library",
                                  node.span, "syntax")
        sig = check_routine(node, env)
        table[node.name] = sig
        env[node.name] = sig.as_type()
    return table


__all__ = [
    "DimVar", "DimSum", "DimExpr", "LinearType", "IntType", "ListType", "QubitPow", "Tensor",
    "Lolli", "Bang", "QUBIT", "INT", "LIST", "operator_type", "is_qubit_only", "qubit_count",
    "normalize", "equivalent", "is_unrestricted", "desugar_annotation", "SCHEMES",
    "instantiate_scheme", "substitute", "TypingContext", "RoutineSignature", "count_uses",
    "check_routine", "check_quantum_library",
]
