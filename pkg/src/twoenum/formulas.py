"""Closed forms and recursions for the weighted counts."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from .exact import binom, exact_div, rpow


@dataclass(frozen=True)
class TheoremValue:
    value: Union[int, Fraction]
    source: str
    params: tuple

    def __int__(self) -> int:
        if isinstance(self.value, Fraction) and self.value.denominator != 1:
            raise ValueError(f"{self.value} is not an integer")
        return int(self.value)


def _check_n(n: int) -> None:
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")


def aztec_rect_count(m: int, xs: Sequence[int]) -> int:
    """Perfect matchings of an ``m``-row Aztec rectangle keeping bottom peaks ``xs``.

    ``2^{C(m+1,2)} / prod_{i<=m} (i-1)! * prod_{i<j} (x_j - x_i)``; the
    factorial product is divided out last and must divide exactly.
    """
    xs = list(xs)
    if m < 1:
        raise ValueError("m must be >= 1")
    if len(xs) != m:
        raise ValueError(f"need exactly {m} kept positions, got {len(xs)}")
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ValueError("kept positions must be strictly increasing")
    num = 2 ** binom(m + 1, 2)
    for j in range(m):
        for i in range(j):
            num *= xs[j] - xs[i]
    den = 1
    for i in range(1, m + 1):
        den *= math.factorial(i - 1)
    return exact_div(num, den)


def theorem1_value(n: int) -> int:
    """2-enumeration of halved ASMs by the number of -1 entries."""
    _check_n(n)
    return 2 ** (n * n)


def theorem2_value(n: int) -> int:
    """Weight ``2^(N_-(even) + N_+(odd))`` summed over halved ASMs."""
    _check_n(n)
    return 3 ** n * 5 ** binom(n, 2)


def theorem3_value(n: int, c: str) -> int:
    """The same weighted sum with every ``c_i`` fixed; ``c`` is ``"n+1"`` or ``"n-1"``."""
    _check_n(n)
    base = 5 ** binom(n, 2)
    if c not in ("n+1", "n-1"):
        raise ValueError(f"variant must be 'n+1' or 'n-1', got {c!r}")
    doubled = (n % 2 == 1) == (c == "n+1")
    return base * 2 ** n if doubled else base


def gn_ratio(n: int) -> Fraction:
    """``M(G_n) / M(G_{n-1}) = 3 * 5^(n-1) / 2^(2n-1)``."""
    if n < 2:
        raise ValueError("the ratio is defined for n >= 2")
    return Fraction(3 * 5 ** (n - 1), 2 ** (2 * n - 1))


def gn_value(n: int) -> Fraction:
    """Matching sum of the weighted halved Aztec diamond, closed form."""
    _check_n(n)
    return Fraction(theorem2_value(n), 2 ** (n * n))


def gn_value_recursive(n: int) -> Fraction:
    """Same value, iterating the ratio from ``M(G_1) = 3/2``."""
    _check_n(n)
    v = Fraction(3, 2)
    for k in range(2, n + 1):
        v *= gn_ratio(k)
    return v


def second_renewal_factor(n: int) -> Fraction:
    """Product of the ``ac + bd`` factors of the second renewal pass."""
    return rpow(Fraction(5, 4), (n - 1) * (2 * n - 1)) * rpow(Fraction(3, 2), 2 * n - 1)


def class_scaling_factor(n: int) -> Fraction:
    """Factor from rescaling the two edge classes before the last step."""
    return rpow(Fraction(2, 3), 2 * n - 2) * rpow(Fraction(4, 5), 2 * (n - 1) ** 2)


def remark_values(n: int) -> tuple[int, int]:
    """``(2^{C(n,2)}, 5^{n^2})``: full ASMs of order ``n`` and ``2n``."""
    _check_n(n)
    return 2 ** binom(n, 2), 5 ** (n * n)
