"""Exact verification engine and numerical cross-checker for the
coalescence catalog of Painleve isomonodromic deformations."""

__version__ = "0.1.0"

from .algebra import (  # noqa: F401
    AlgebraError,
    DivisionByZero,
    EpsOrder,
    Poly,
    RationalExpr,
    UnknownVariable,
    arith,
    declare_constant,
    differentiate,
    eps_valuation,
    substitute,
)
from .exprlang import ExprSyntaxError, UndeclaredIdentifier, parse, lower, render  # noqa: F401
