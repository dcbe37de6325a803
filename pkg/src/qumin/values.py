"""Runtime values of the classical fragment and helpers to inspect them.

Numbers are Python ``int``/``float``/``complex``; booleans are ``bool``;
strings are ``str``; sequences (vectors, matrices, lists) are Python lists
that are never mutated after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Tuple

import numpy as np

from . import syntax as S
from .errors import RebindError, UnboundName


class Environment:
    """Chained scopes; a name is bound at most once per scope."""

    __slots__ = ("vars", "parent")

    def __init__(self, parent: Optional["Environment"] = None):
        self.vars: dict = {}
        self.parent = parent

    def define(self, name: str, value: Any, span=None) -> None:
        if name in self.vars:
            raise RebindError(f"'{name}' is already bound in this scope", span)
        self.vars[name] = value

    def lookup(self, name: str, span=None) -> Any:
        env = self
        while env is not None:
            if name in env.vars:
                return env.vars[name]
            env = env.parent
        raise UnboundName(f"unbound name '{name}'", span)

    def __contains__(self, name: str) -> bool:
        env = self
        while env is not None:
            if name in env.vars:
                return True
            env = env.parent
        return False


@dataclass(eq=False)
class Closure:
    params: Tuple[str, ...]
    body: Tuple[S.Node, ...]
    env: Environment
    signature: Any = None  # RoutineSignature for quantum routines
    bound: Tuple[Any, ...] = ()
    name: Optional[str] = None
    origin: Any = field(default=None, repr=False)

    @property
    def remaining(self) -> Tuple[str, ...]:
        return self.params[len(self.bound):]


@dataclass(eq=False)
class Builtin:
    name: str
    arity: int
    fn: Callable[..., Any]
    bound: Tuple[Any, ...] = ()

    @property
    def remaining(self) -> int:
        return self.arity - len(self.bound)


def is_number(x: Any) -> bool:
    return isinstance(x, (int, float, complex)) and not isinstance(x, bool)


def is_callable_value(x: Any) -> bool:
    return isinstance(x, (Closure, Builtin))


def to_value(arr) -> Any:
    """numpy result -> nested Python lists; drops an all-zero imaginary part."""
    arr = np.asarray(arr)
    if np.iscomplexobj(arr) and not np.any(arr.imag):
        arr = arr.real
    if arr.ndim == 0:
        return arr.item()
    return arr.tolist()


def values_equal(a: Any, b: Any, tol: float = 1e-12) -> bool:
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(values_equal(x, y, tol) for x, y in zip(a, b))
    if is_number(a) and is_number(b):
        if isinstance(a, int) and isinstance(b, int):
            return a == b
        return abs(a - b) <= tol
    if isinstance(a, bool) and isinstance(b, bool):
        return a is b
    if isinstance(a, str) and isinstance(b, str):
        return a == b
    return a is b


def _real(x: float) -> str:
    return str(x) if isinstance(x, int) else repr(float(x))


def show(v: Any) -> str:
    """Render a value the way the REPL prints it."""
    if isinstance(v, bool):
        return "#t" if v else "#f"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, complex):
        sign = "-" if v.imag < 0 else "+"
        return f"{_real(v.real)}{sign}{_real(abs(v.imag))}i"
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, list):
        return "[" + " ".join(show(x) for x in v) + "]"
    if isinstance(v, Closure):
        kind = "routine" if v.signature is not None else "lambda"
        label = f" {v.name}" if v.name else ""
        return f"<{kind}{label}({', '.join(v.remaining)})>"
    if isinstance(v, Builtin):
        return f"<builtin {v.name}/{v.remaining}>"
    return repr(v)


def describe(v: Any) -> str:
    """Short shape description used in constraint-violation messages."""
    if isinstance(v, bool):
        return f"boolean {show(v)}"
    if isinstance(v, int):
        return f"integer {v}"
    if isinstance(v, float):
        return f"float {v!r}"
    if isinstance(v, complex):
        return f"complex {show(v)}"
    if isinstance(v, str):
        return "string"
    if isinstance(v, list):
        if v and all(isinstance(r, list) for r in v):
            widths = {len(r) for r in v}
            if len(widths) == 1:
                return f"{len(v)}x{widths.pop()} matrix"
            return "ragged nested list"
        return f"list of length {len(v)}"
    if isinstance(v, (Closure, Builtin)):
        return "function"
    return type(v).__name__
