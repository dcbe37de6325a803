"""Exception hierarchy shared by every stage of the Qumin toolchain.

Each top-level family maps to one CLI exit status, so the driver only needs
to look at the base class of whatever escaped.
"""

from __future__ import annotations

from typing import Optional, Tuple

Span = Tuple[int, int]


class QuminError(Exception):
    """Base class. ``span`` is a (start, end) character-offset pair, or None."""

    exit_code = 4

    def __init__(self, message: str, span: Optional[Span] = None):
        super().__init__(message)
        self.message = message
        self.span = span


# -- parsing ---------------------------------------------------------------

class ParseError(QuminError):
    exit_code = 1

    def __init__(self, message: str, span: Span, expected: frozenset = frozenset()):
        super().__init__(message, span)
        self.expected = expected


class TrailingInput(ParseError):
    pass


# -- static typing ---------------------------------------------------------

class TypeCheckError(QuminError):
    """A quantum routine failed to typecheck.

    ``rule`` names the typing rule (or pseudo-rule) that rejected the term and
    ``routine`` the top-level definition being checked, when known.
    """

    exit_code = 2

    def __init__(self, message: str, span: Optional[Span] = None,
                 rule: str = "", routine: Optional[str] = None):
        super().__init__(message, span)
        self.rule = rule
        self.routine = routine

    def __str__(self) -> str:
        prefix = f"in routine '{self.routine}': " if self.routine else ""
        rule = f" [{self.rule}]" if self.rule else ""
        return f"{prefix}{self.message}{rule}"


class LinearityViolation(TypeCheckError):
    def __init__(self, name: str, used_count: Optional[int], span: Optional[Span] = None,
                 routine: Optional[str] = None):
        self.name = name
        self.used_count = used_count
        rule = "weakening" if used_count == 0 else "contraction"
        super().__init__(self._describe(name, used_count), span, rule, routine)

    @staticmethod
    def _describe(name: str, used_count: Optional[int]) -> str:
        if used_count is None:
            return f"linear variable '{name}' is used more than once"
        return f"linear variable '{name}' must be used exactly once, but is used {used_count} time(s)"

    def with_count(self, used_count: int) -> "LinearityViolation":
        return LinearityViolation(self.name, used_count, self.span, self.routine)


class TypeMismatch(TypeCheckError):
    def __init__(self, expected, found, span: Optional[Span] = None, rule: str = "",
                 routine: Optional[str] = None):
        self.expected = expected
        self.found = found
        super().__init__(f"expected {expected}, found {found}", span, rule, routine)


class DimMismatch(TypeCheckError):
    def __init__(self, expected, found, span: Optional[Span] = None, rule: str = "",
                 routine: Optional[str] = None):
        self.expected = expected
        self.found = found
        super().__init__(f"dimension mismatch: expected {expected}, found {found}",
                         span, rule, routine)


class UnknownName(TypeCheckError):
    def __init__(self, name: str, span: Optional[Span] = None, routine: Optional[str] = None):
        self.name = name
        super().__init__(f"unknown name '{name}'", span, "var", routine)


class PromotionError(TypeCheckError):
    pass


class UnsupportedTerm(TypeCheckError):
    pass


# -- runtime ---------------------------------------------------------------

class RuntimeFault(QuminError):
    exit_code = 4


class UnboundName(RuntimeFault):
    pass


class ArityError(RuntimeFault):
    pass


class TypeErrorDynamic(RuntimeFault):
    pass


class DivideByZero(RuntimeFault):
    pass


class RecursionLimit(RuntimeFault):
    pass


class RebindError(RuntimeFault):
    pass


class ShapeError(RuntimeFault):
    pass


class DimensionMismatch(ShapeError):
    pass


class NegativeCount(RuntimeFault):
    pass


class NormalizationError(RuntimeFault):
    pass


class ConfigError(RuntimeFault):
    pass


class NotBasisColumns(ShapeError):
    pass


class NonPowerOfTwo(ShapeError):
    pass


class EntanglementError(RuntimeFault):
    """A tensor-split was asked of a state that is not a product state."""


class CyclicLoad(RuntimeFault):
    pass


class ConstraintViolation(QuminError):
    exit_code = 3

    def __init__(self, position: int, expected: str, found: str,
                 routine: Optional[str] = None, span: Optional[Span] = None):
        self.position = position
        self.expected = expected
        self.found = found
        self.routine = routine
        where = f"'{routine}' " if routine else ""
        super().__init__(f"argument {position} of {where}expected {expected}, got {found}", span)


class ModuleNotFound(QuminError):
    exit_code = 5
