"""Exact integer and rational arithmetic.

Python ints are arbitrary precision and :class:`fractions.Fraction` is kept in
lowest terms with a positive denominator, so both are used directly; this
module only adds the few helpers the rest of the package needs plus the
string forms used in every JSON/CSV payload.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

Rational = Fraction
Number = Union[int, Fraction]

__all__ = [
    "Rational",
    "as_rational",
    "binom",
    "rpow",
    "format_rational",
    "parse_rational",
    "exact_div",
]


def as_rational(value: Number | str) -> Fraction:
    """Coerce an int, Fraction or ``"p/q"`` string to a Fraction.

    Floats are refused: nothing in the counting path may be inexact.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not weights")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    raise TypeError(f"cannot use {type(value).__name__} as an exact rational")


def binom(n: int, k: int) -> int:
    """Binomial coefficient, 0 when ``k > n``."""
    if n < 0 or k < 0:
        raise ValueError("binom takes nonnegative arguments")
    return math.comb(n, k)


def rpow(base: Number | str, e: int) -> Fraction:
    """Exact power of a rational with a nonnegative integer exponent."""
    if e < 0:
        raise ValueError("exponent must be nonnegative")
    return as_rational(base) ** e


def format_rational(value: Number) -> str:
    """``"p/q"``, or ``"p"`` when the denominator is 1."""
    q = as_rational(value)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def parse_rational(text: str) -> Fraction:
    text = text.strip()
    if not text:
        raise ValueError("empty rational literal")
    if "." in text or "e" in text.lower():
        raise ValueError(f"decimal/float literal {text!r} is not an exact rational")
    return Fraction(text)


def exact_div(a: int, b: int) -> int:
    """Integer division that must be exact."""
    q, r = divmod(a, b)
    if r:
        raise ArithmeticError(f"{a} is not divisible by {b}")
    return q
