"""Qumin: a small quantum programming language.

The package is split by pipeline stage: ``syntax`` parses source text,
``typesys`` checks the linear quantum fragment, ``qcore`` is the dense
state-vector backend, ``interp`` evaluates programs and ``cli`` drives it all
from the command line.
"""

from __future__ import annotations

from .errors import (
    ConstraintViolation, LinearityViolation, ModuleNotFound, ParseError, QuminError,
    RuntimeFault, TypeCheckError,
)
from .interp import Interpreter
from .syntax import parse_expr, parse_program, parse_type_annotation

__all__ = [
    "ConstraintViolation", "Interpreter", "LinearityViolation", "ModuleNotFound",
    "ParseError", "QuminError", "RuntimeFault", "TypeCheckError", "parse_expr",
    "parse_program", "parse_type_annotation",
]
__version__ = "0.1.0"
