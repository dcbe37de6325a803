"""Syntax tree, PEG parser and pretty-printer for Qumin source.

The grammar is a packrat-memoised recursive descent over the raw text, with
ordered choice exactly as in the language's PEG::

    expr  <- _ (load / func / ifelse / call / comp / infixCall / prefixCall
               / list / assignment / boolLit / stringLit / complexLit
               / floatLit / intLit / name) _

with these additions: ``let``-forms are tried first (keyword priority),
lambda parameters may carry ``: type`` annotations, ``let f(x, y){...}``
defines a named function, ``let u ⊗ v = M`` and ``let !v = M`` destructure
tensors and bangs, ``!M`` promotes a term, calls may be chained
(``f(a)(b)``), and ``//`` starts a line comment.

Spans are (start, end) character offsets into the source string.
"""

from __future__ import annotations

import re
from decimal import Decimal
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Union

from .errors import ParseError, Span, TrailingInput

__all__ = [
    "Node", "Load", "Assignment", "TensorLet", "BangLet", "Param", "Lambda", "Call",
    "InfixCall", "PrefixCall", "Composition", "IfElse", "Promote", "ListLit",
    "IntLit", "FloatLit", "ComplexLit", "BoolLit", "StringLit", "Name",
    "TypeAnnotation", "QubitAnn", "IntAnn", "ListAnn", "TensorAnn", "ArrowAnn",
    "OperatorAnn", "BangAnn",
    "parse_program", "parse_expr", "parse_type_annotation",
    "unparse", "unparse_program", "unparse_type", "line_col",
]


# ---------------------------------------------------------------------------
# type annotations (surface syntax)

@dataclass(frozen=True)
class TypeAnnotation:
    pass


@dataclass(frozen=True)
class QubitAnn(TypeAnnotation):
    pass


@dataclass(frozen=True)
class IntAnn(TypeAnnotation):
    pass


@dataclass(frozen=True)
class ListAnn(TypeAnnotation):
    pass


@dataclass(frozen=True)
class TensorAnn(TypeAnnotation):
    left: TypeAnnotation
    right: TypeAnnotation


@dataclass(frozen=True)
class ArrowAnn(TypeAnnotation):
    arg: TypeAnnotation
    result: TypeAnnotation


@dataclass(frozen=True)
class OperatorAnn(TypeAnnotation):
    qubits: int


@dataclass(frozen=True)
class BangAnn(TypeAnnotation):
    inner: TypeAnnotation


# ---------------------------------------------------------------------------
# expression nodes
#
# Spans never take part in equality, so two trees parsed from differently
# formatted text compare equal when they have the same shape.

_NOSPAN: Span = (0, 0)


def _span_field():
    return field(default=_NOSPAN, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Node:
    span: Span = _span_field()


@dataclass(frozen=True)
class Load(Node):
    quantum: bool
    name: str


@dataclass(frozen=True)
class Assignment(Node):
    name: str
    expr: Node


@dataclass(frozen=True)
class TensorLet(Node):
    """``let u ⊗ v = M``: binds both halves for the rest of the body."""
    left: str
    right: str
    expr: Node
    left_type: Optional[TypeAnnotation] = None


@dataclass(frozen=True)
class BangLet(Node):
    """``let !v = M``: unwraps a banged value into an unrestricted binding."""
    name: str
    expr: Node


@dataclass(frozen=True)
class Param(Node):
    name: str
    annotation: Optional[TypeAnnotation] = None


@dataclass(frozen=True)
class Lambda(Node):
    params: Tuple[Param, ...]
    body: Tuple[Node, ...]
    immediate_args: Optional[Tuple[Node, ...]] = None

    @property
    def annotated(self) -> bool:
        return all(p.annotation is not None for p in self.params)


@dataclass(frozen=True)
class Call(Node):
    callee: Node
    args: Tuple[Node, ...]


@dataclass(frozen=True)
class InfixCall(Node):
    lhs: Node
    op: str
    rhs: Node


@dataclass(frozen=True)
class PrefixCall(Node):
    op: str
    arg: Node


@dataclass(frozen=True)
class Composition(Node):
    names: Tuple[str, ...]
    args: Tuple[Node, ...]


@dataclass(frozen=True)
class IfElse(Node):
    cond: Node
    then_body: Tuple[Node, ...]
    else_body: Tuple[Node, ...]


@dataclass(frozen=True)
class Promote(Node):
    expr: Node


@dataclass(frozen=True)
class ListLit(Node):
    elems: Tuple[Node, ...]


@dataclass(frozen=True)
class IntLit(Node):
    value: int


@dataclass(frozen=True)
class FloatLit(Node):
    value: float


@dataclass(frozen=True)
class ComplexLit(Node):
    re: Union[int, float]
    im: Union[int, float]


@dataclass(frozen=True)
class BoolLit(Node):
    value: bool


@dataclass(frozen=True)
class StringLit(Node):
    value: str


@dataclass(frozen=True)
class Name(Node):
    id: str


# ---------------------------------------------------------------------------
# lexical rules

_WS = re.compile(r"(?:\s+|//[^\n]*)*")
_NAME = re.compile(r"[a-zA-Z⊗·+\-/*=?]+")
_LVALUE = re.compile(r"[a-zA-Z?]+")
_NUM = r"[0-9]+(?:\.[0-9]+)?"
_COMPLEX = re.compile(rf"([+-]?)({_NUM})([+-])({_NUM})i")
_FLOAT = re.compile(r"-?[0-9]+\.[0-9]+")
_INT = re.compile(r"-?[0-9]+")
_STRING = re.compile(r'"([a-zA-Z 0-9!#$?]*)"')
_NAT = re.compile(r"[0-9]+")
KEYWORDS = frozenset({"let", "lambda", "if", "else"})
_NAME_CHARS = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ⊗·+-/*=?")

_Result = Optional[Tuple[Node, int]]


def _number(text: str) -> Union[int, float]:
    return float(text) if "." in text else int(text)


def line_col(source: str, offset: int) -> Tuple[int, int]:
    """1-based line and column of a character offset."""
    offset = max(0, min(offset, len(source)))
    line = source.count("\n", 0, offset) + 1
    col = offset - (source.rfind("\n", 0, offset) + 1) + 1
    return line, col


class _Parser:
    def __init__(self, source: str):
        self.src = source
        self.n = len(source)
        self.far = 0
        self.expected: set = set()
        self.memo: dict = {}
        self.problem: Optional[Tuple[int, int, str]] = None

    # -- failure bookkeeping ------------------------------------------------

    def fail(self, pos: int, what: str) -> None:
        if pos > self.far:
            self.far = pos
            self.expected = {what}
        elif pos == self.far:
            self.expected.add(what)

    def error(self) -> ParseError:
        if self.problem is not None:
            start, end, msg = self.problem
            return ParseError(msg, (start, end), frozenset())
        pos = min(self.far, self.n)
        found = repr(self.src[pos]) if pos < self.n else "end of input"
        expected = ", ".join(sorted(self.expected)) or "expression"
        return ParseError(f"expected {expected}, found {found}",
                          (pos, min(pos + 1, self.n)), frozenset(self.expected))

    # -- terminals -------------------------------------------------------------

    def ws(self, pos: int) -> int:
        return _WS.match(self.src, pos).end()

    def lit(self, pos: int, text: str) -> Optional[int]:
        if self.src.startswith(text, pos):
            return pos + len(text)
        self.fail(pos, repr(text))
        return None

    def keyword(self, pos: int, word: str) -> Optional[int]:
        end = pos + len(word)
        if self.src.startswith(word, pos) and (end >= self.n or self.src[end] not in _NAME_CHARS):
            return end
        self.fail(pos, repr(word))
        return None

    def regex(self, pos: int, pattern: re.Pattern, what: str):
        m = pattern.match(self.src, pos)
        if m is None:
            self.fail(pos, what)
        return m

    def name(self, pos: int) -> Optional[Tuple[str, int]]:
        m = self.regex(pos, _NAME, "name")
        if m is None or m.group() in KEYWORDS:
            return None
        return m.group(), m.end()

    def lvalue(self, pos: int) -> Optional[Tuple[str, int]]:
        m = self.regex(pos, _LVALUE, "identifier")
        if m is None or m.group() in KEYWORDS:
            return None
        return m.group(), self.ws(m.end())

    # -- expressions -------------------------------------------------------

    def expr(self, pos: int) -> _Result:
        key = pos
        if key in self.memo:
            return self.memo[key]
        start = self.ws(pos)
        result = None
        for alt in (self.p_load, self.p_let, self.p_func, self.p_ifelse, self.p_promote,
                    self.p_call, self.p_comp, self.p_infix, self.p_prefix, self.p_list,
                    self.p_bool, self.p_string, self.p_complex, self.p_float, self.p_int,
                    self.p_name):
            r = alt(start)
            if r is not None:
                node, end = r
                result = (node, self.ws(end))
                break
        self.memo[key] = result
        return result

    def exprs(self, pos: int) -> Tuple[Tuple[Node, ...], int]:
        out = []
        while True:
            r = self.expr(pos)
            if r is None or r[1] == pos:
                return tuple(out), pos
            out.append(r[0])
            pos = r[1]

    def args(self, pos: int) -> Optional[Tuple[Tuple[Node, ...], int]]:
        """``"(" expr (sep expr)* ")"`` starting at the open paren."""
        p = self.lit(pos, "(")
        if p is None:
            return None
        r = self.expr(p)
        if r is None:
            return None
        out = [r[0]]
        p = r[1]
        while True:
            q = self.lit(p, ",")
            if q is None:
                break
            r = self.expr(q)
            if r is None:
                return None
            out.append(r[0])
            p = r[1]
        p = self.lit(p, ")")
        if p is None:
            return None
        return tuple(out), p

    def block(self, pos: int) -> Optional[Tuple[Tuple[Node, ...], int]]:
        p = self.lit(self.ws(pos), "{")
        if p is None:
            return None
        body, p = self.exprs(p)
        p = self.lit(self.ws(p), "}")
        if p is None:
            return None
        return body, p

    def p_load(self, pos: int) -> _Result:
        for word, quantum in (("--qload", True), ("--load", False)):
            p = self.keyword(pos, word)
            if p is not None:
                r = self.lvalue(self.ws(p))
                if r is None:
                    end = self.ws(p)
                    self.problem = self.problem or (pos, max(end, p), f"{word} needs a module name")
                    return None
                return Load(quantum, r[0], span=(pos, r[1])), r[1]
        return None

    def p_let(self, pos: int) -> _Result:
        p = self.keyword(pos, "let")
        if p is None:
            return None
        p = self.ws(p)
        if p == pos + 3 and p < self.n:
            # "let" must be followed by whitespace or a bang pattern
            if self.src[p] != "!":
                return None
        # let !v = M
        if self.src.startswith("!", p):
            r = self.lvalue(self.ws(p + 1))
            if r is None:
                return None
            q = self.lit(r[1], "=")
            if q is None:
                return None
            e = self.expr(q)
            if e is None:
                return None
            return BangLet(r[0], e[0], span=(pos, e[1])), e[1]
        r = self.lvalue(p)
        if r is None:
            return None
        name, p = r
        # let f(x, y){ ... }
        if self.src.startswith("(", p):
            lam = self.lambda_tail(p, pos)
            if lam is None:
                return None
            return Assignment(name, lam[0], span=(pos, lam[1])), lam[1]
        # let u ⊗ v = M   /   let u : T ⊗ v = M
        left_type = None
        q = p
        if self.src.startswith(":", q):
            t = self.type_expr(self.ws(q + 1))
            if t is None:
                return None
            left_type, q = t
            q = self.ws(q)
            if not self.src.startswith("⊗", q):
                self.fail(q, "'⊗'")
                return None
        if self.src.startswith("⊗", q):
            r2 = self.lvalue(self.ws(q + 1))
            if r2 is None:
                return None
            q = self.lit(r2[1], "=")
            if q is None:
                return None
            e = self.expr(q)
            if e is None:
                return None
            return TensorLet(name, r2[0], e[0], left_type, span=(pos, e[1])), e[1]
        q = self.lit(p, "=")
        if q is None:
            return None
        e = self.expr(q)
        if e is None:
            return None
        return Assignment(name, e[0], span=(pos, e[1])), e[1]

    def params(self, pos: int) -> Optional[Tuple[Tuple[Param, ...], int]]:
        p = self.lit(pos, "(")
        if p is None:
            return None
        out = []
        p = self.ws(p)
        while True:
            start = p
            r = self.lvalue(p)
            if r is None:
                return None
            name, p = r
            ann = None
            if self.src.startswith(":", p):
                t = self.type_expr(self.ws(p + 1))
                if t is None:
                    return None
                ann, p = t
                p = self.ws(p)
            out.append(Param(name, ann, span=(start, p)))
            q = self.lit(p, ",")
            if q is None:
                break
            p = self.ws(q)
        p = self.lit(p, ")")
        if p is None:
            return None
        seen = set()
        for prm in out:
            if prm.name in seen:
                if self.problem is None:
                    self.problem = (prm.span[0], prm.span[1],
                                    f"duplicate parameter '{prm.name}'")
                return None
            seen.add(prm.name)
        return tuple(out), p

    def lambda_tail(self, pos: int, start: int) -> _Result:
        r = self.params(pos)
        if r is None:
            return None
        params, p = r
        b = self.block(p)
        if b is None:
            return None
        body, p = b
        immediate = None
        if self.src.startswith("(", p):
            a = self.args(p)
            if a is not None:
                immediate, p = a
        return Lambda(params, body, immediate, span=(start, p)), p

    def p_func(self, pos: int) -> _Result:
        p = self.keyword(pos, "lambda")
        if p is None:
            return None
        return self.lambda_tail(self.ws(p), pos)

    def p_ifelse(self, pos: int) -> _Result:
        p = self.keyword(pos, "if")
        if p is None:
            return None
        p = self.lit(self.ws(p), "(")
        if p is None:
            return None
        c = self.expr(p)
        if c is None:
            return None
        p = self.lit(c[1], ")")
        if p is None:
            return None
        t = self.block(p)
        if t is None:
            return None
        p = self.keyword(self.ws(t[1]), "else")
        if p is None:
            return None
        e = self.block(p)
        if e is None:
            return None
        return IfElse(c[0], t[0], e[0], span=(pos, e[1])), e[1]

    def p_promote(self, pos: int) -> _Result:
        if not self.src.startswith("!", pos):
            self.fail(pos, "'!'")
            return None
        r = self.expr(pos + 1)
        if r is None:
            return None
        return Promote(r[0], span=(pos, r[1])), r[1]

    def p_call(self, pos: int) -> _Result:
        r = self.name(pos)
        if r is None:
            return None
        name, p = r
        a = self.args(p)
        if a is None:
            return None
        node: Node = Call(Name(name, span=(pos, p)), a[0], span=(pos, a[1]))
        p = a[1]
        while self.src.startswith("(", p):
            a = self.args(p)
            if a is None:
                break
            node = Call(node, a[0], span=(pos, a[1]))
            p = a[1]
        return node, p

    def p_comp(self, pos: int) -> _Result:
        r = self.name(pos)
        if r is None:
            return None
        names = [r[0]]
        p = r[1]
        while True:
            q = self.ws(p)
            if not self.src.startswith(".", q):
                self.fail(q, "'.'")
                break
            r = self.name(self.ws(q + 1))
            if r is None:
                return None
            names.append(r[0])
            p = r[1]
        if len(names) < 2:
            return None
        p = self.lit(self.ws(p), "(")
        if p is None:
            return None
        args = []
        p = self.ws(p)
        while True:
            e = self.expr(p)
            if e is None or e[1] == p:
                break
            args.append(e[0])
            p = e[1]
            q = self.lit(p, ",")
            if q is not None:
                p = q
        p = self.lit(p, ")")
        if p is None:
            return None
        return Composition(tuple(names), tuple(args), span=(pos, p)), p

    def p_infix(self, pos: int) -> _Result:
        p = self.lit(pos, "(")
        if p is None:
            return None
        lhs = self.expr(p)
        if lhs is None:
            return None
        r = self.name(lhs[1])
        if r is None:
            return None
        rhs = self.expr(r[1])
        if rhs is None:
            return None
        p = self.lit(rhs[1], ")")
        if p is None:
            return None
        return InfixCall(lhs[0], r[0], rhs[0], span=(pos, p)), p

    def p_prefix(self, pos: int) -> _Result:
        p = self.lit(pos, "(")
        if p is None:
            return None
        r = self.name(self.ws(p))
        if r is None:
            return None
        arg = self.expr(r[1])
        if arg is None:
            return None
        p = self.lit(arg[1], ")")
        if p is None:
            return None
        return PrefixCall(r[0], arg[0], span=(pos, p)), p

    def p_list(self, pos: int) -> _Result:
        p = self.lit(pos, "[")
        if p is None:
            return None
        elems, p = self.exprs(p)
        p = self.lit(self.ws(p), "]")
        if p is None:
            return None
        return ListLit(elems, span=(pos, p)), p

    def p_bool(self, pos: int) -> _Result:
        for text, value in (("#t", True), ("#f", False)):
            if self.src.startswith(text, pos):
                return BoolLit(value, span=(pos, pos + 2)), pos + 2
        self.fail(pos, "boolean")
        return None

    def p_string(self, pos: int) -> _Result:
        m = self.regex(pos, _STRING, "string")
        if m is None:
            return None
        return StringLit(m.group(1), span=(pos, m.end())), m.end()

    def p_complex(self, pos: int) -> _Result:
        m = self.regex(pos, _COMPLEX, "complex number")
        if m is None:
            return None
        re_sign, re_txt, im_sign, im_txt = m.groups()
        re_val = _number(re_txt)
        im_val = _number(im_txt)
        if re_sign == "-":
            re_val = -re_val
        if im_sign == "-":
            im_val = -im_val
        return ComplexLit(re_val, im_val, span=(pos, m.end())), m.end()

    def p_float(self, pos: int) -> _Result:
        m = self.regex(pos, _FLOAT, "float")
        if m is None:
            return None
        return FloatLit(float(m.group()), span=(pos, m.end())), m.end()

    def p_int(self, pos: int) -> _Result:
        m = self.regex(pos, _INT, "integer")
        if m is None:
            return None
        return IntLit(int(m.group()), span=(pos, m.end())), m.end()

    def p_name(self, pos: int) -> _Result:
        r = self.name(pos)
        if r is None:
            return None
        return Name(r[0], span=(pos, r[1])), r[1]

    # -- types -------------------------------------------------------------------

    def type_expr(self, pos: int) -> Optional[Tuple[TypeAnnotation, int]]:
        left = self.type_tensor(pos)
        if left is None:
            return None
        t, p = left
        q = self.ws(p)
        if self.src.startswith(">", q):
            right = self.type_expr(self.ws(q + 1))
            if right is None:
                return None
            return ArrowAnn(t, right[0]), right[1]
        self.fail(q, "'>'")
        return t, p

    def type_tensor(self, pos: int) -> Optional[Tuple[TypeAnnotation, int]]:
        r = self.type_atom(pos)
        if r is None:
            return None
        t, p = r
        while True:
            q = self.ws(p)
            if not self.src.startswith("*", q):
                self.fail(q, "'*'")
                return t, p
            r = self.type_atom(self.ws(q + 1))
            if r is None:
                return None
            t, p = TensorAnn(t, r[0]), r[1]

    def type_atom(self, pos: int) -> Optional[Tuple[TypeAnnotation, int]]:
        for word, ann in (("qubit", QubitAnn()), ("int", IntAnn()), ("list", ListAnn())):
            p = self.keyword(pos, word)
            if p is not None:
                return ann, p
        p = self.keyword(pos, "operator")
        if p is not None:
            p = self.lit(self.ws(p), "[")
            if p is None:
                return None
            p = self.ws(p)
            m = self.regex(p, _NAT, "qubit count")
            if m is None:
                return None
            count = int(m.group())
            if count < 1:
                self.problem = self.problem or (p, m.end(), "operator[n] requires n >= 1")
                return None
            q = self.lit(self.ws(m.end()), "]")
            if q is None:
                return None
            return OperatorAnn(count), q
        if self.src.startswith("!", pos):
            p = self.lit(self.ws(pos + 1), "{")
            if p is None:
                return None
            r = self.type_expr(self.ws(p))
            if r is None:
                return None
            q = self.lit(self.ws(r[1]), "}")
            if q is None:
                return None
            return BangAnn(r[0]), q
        self.fail(pos, "'!'")
        if self.src.startswith("(", pos):
            r = self.type_expr(self.ws(pos + 1))
            if r is None:
                return None
            q = self.lit(self.ws(r[1]), ")")
            if q is None:
                return None
            return r[0], q
        self.fail(pos, "type")
        return None


# ---------------------------------------------------------------------------
# entry points

def parse_program(source: str) -> Tuple[Node, ...]:
    """Parse a whole source file into its ordered top-level expressions."""
    p = _Parser(source)
    nodes, pos = p.exprs(0)
    pos = p.ws(pos)
    if p.problem is not None:
        raise p.error()
    if pos != len(source):
        p.fail(pos, "expression")
        raise p.error()
    return nodes


def parse_expr(source: str) -> Node:
    """Parse exactly one expression (REPL entry point)."""
    p = _Parser(source)
    r = p.expr(0)
    if r is None or p.problem is not None:
        raise p.error()
    node, pos = r
    pos = p.ws(pos)
    if pos != len(source):
        raise TrailingInput("unexpected trailing input", (pos, len(source)))
    return node


def parse_type_annotation(source: str) -> TypeAnnotation:
    p = _Parser(source)
    r = p.type_expr(p.ws(0))
    if r is None:
        raise p.error()
    ann, pos = r
    pos = p.ws(pos)
    if pos != len(source):
        raise TrailingInput("unexpected trailing input in type", (pos, len(source)))
    return ann


# ---------------------------------------------------------------------------
# pretty-printer

def unparse_type(ann: TypeAnnotation) -> str:
    if isinstance(ann, QubitAnn):
        return "qubit"
    if isinstance(ann, IntAnn):
        return "int"
    if isinstance(ann, ListAnn):
        return "list"
    if isinstance(ann, OperatorAnn):
        return f"operator[{ann.qubits}]"
    if isinstance(ann, BangAnn):
        return "!{" + unparse_type(ann.inner) + "}"
    if isinstance(ann, TensorAnn):
        left = unparse_type(ann.left)
        if isinstance(ann.left, ArrowAnn):
            left = f"({left})"
        right = unparse_type(ann.right)
        if isinstance(ann.right, (ArrowAnn, TensorAnn)):
            right = f"({right})"
        return f"{left} * {right}"
    if isinstance(ann, ArrowAnn):
        left = unparse_type(ann.arg)
        if isinstance(ann.arg, ArrowAnn):
            left = f"({left})"
        return f"{left} > {unparse_type(ann.result)}"
    raise TypeError(f"not a type annotation: {ann!r}")


def _num(value: Union[int, float]) -> str:
    if isinstance(value, int):
        return str(value)
    text = repr(float(value))
    if "e" in text:
        text = format(Decimal(text), "f")
    if "." not in text:
        text += "."
    if text.endswith("."):
        text += "0"
    return text


def _body(nodes: Sequence[Node], indent: str) -> str:
    inner = indent + "  "
    lines = "".join(f"{inner}{unparse(n, inner)}\n" for n in nodes)
    return "{\n" + lines + indent + "}"


def _call_args(args: Sequence[Node], indent: str) -> str:
    return "(" + ", ".join(unparse(a, indent) for a in args) + ")"


def unparse(node: Node, indent: str = "") -> str:
    """Render a node back to source text that parses to an equal tree."""
    u = lambda n: unparse(n, indent)  # noqa: E731
    if isinstance(node, Load):
        return f"{'--qload' if node.quantum else '--load'} {node.name}"
    if isinstance(node, Assignment):
        return f"let {node.name} = {u(node.expr)}"
    if isinstance(node, TensorLet):
        ann = f" : {unparse_type(node.left_type)}" if node.left_type is not None else ""
        return f"let {node.left}{ann} ⊗ {node.right} = {u(node.expr)}"
    if isinstance(node, BangLet):
        return f"let !{node.name} = {u(node.expr)}"
    if isinstance(node, Lambda):
        params = ", ".join(
            p.name if p.annotation is None else f"{p.name} : {unparse_type(p.annotation)}"
            for p in node.params)
        text = f"lambda({params}){_body(node.body, indent)}"
        if node.immediate_args is not None:
            text += _call_args(node.immediate_args, indent)
        return text
    if isinstance(node, Call):
        callee = node.callee
        if isinstance(callee, (Name, Call)):
            head = u(callee)
        else:
            raise ValueError("only names and calls can be printed in callee position")
        return head + _call_args(node.args, indent)
    if isinstance(node, InfixCall):
        return f"({u(node.lhs)} {node.op} {u(node.rhs)})"
    if isinstance(node, PrefixCall):
        return f"({node.op} {u(node.arg)})"
    if isinstance(node, Composition):
        return " . ".join(node.names) + "(" + " ".join(u(a) for a in node.args) + ")"
    if isinstance(node, IfElse):
        return (f"if({u(node.cond)}){_body(node.then_body, indent)}"
                f" else {_body(node.else_body, indent)}")
    if isinstance(node, Promote):
        return "!" + u(node.expr)
    if isinstance(node, ListLit):
        return "[" + " ".join(u(e) for e in node.elems) + "]"
    if isinstance(node, IntLit):
        return str(node.value)
    if isinstance(node, FloatLit):
        return _num(node.value)
    if isinstance(node, ComplexLit):
        sign = "-" if node.im < 0 or (node.im == 0 and str(node.im).startswith("-")) else "+"
        return f"{_num(node.re)}{sign}{_num(abs(node.im))}i"
    if isinstance(node, BoolLit):
        return "#t" if node.value else "#f"
    if isinstance(node, StringLit):
        return f'"{node.value}"'
    if isinstance(node, Name):
        return node.id
    raise TypeError(f"not a syntax node: {node!r}")


def unparse_program(nodes: Sequence[Node]) -> str:
    return "".join(unparse(n) + "\n" for n in nodes)


def walk(node: Node, visit: Callable[[Node], None]) -> None:
    """Pre-order traversal over every expression node (params excluded)."""
    visit(node)
    children: Sequence[Node] = ()
    if isinstance(node, (Assignment, TensorLet, BangLet, Promote)):
        children = (node.expr,)
    elif isinstance(node, Lambda):
        children = node.body + (node.immediate_args or ())
    elif isinstance(node, Call):
        children = (node.callee,) + node.args
    elif isinstance(node, InfixCall):
        children = (node.lhs, node.rhs)
    elif isinstance(node, PrefixCall):
        children = (node.arg,)
    elif isinstance(node, Composition):
        children = node.args
    elif isinstance(node, IfElse):
        children = (node.cond,) + node.then_body + node.else_body
    elif isinstance(node, ListLit):
        children = node.elems
    for child in children:
        walk(child, visit)
