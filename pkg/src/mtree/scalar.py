"""Scalar arithmetic modes.

Weights and map values are either :class:`fractions.Fraction` (exact mode) or
``float`` (float mode). A :class:`ScalarMode` carries the choice plus the
absolute tolerance used for equality in float mode, and knows how to parse and
format values so that text round-trips are lossless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

Scalar = Union[Fraction, float]

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class ScalarMode:
    exact: bool = True
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.tol < 0 or math.isnan(self.tol):
            raise ValueError(f"tolerance must be non-negative, got {self.tol}")

    @property
    def name(self) -> str:
        return "exact" if self.exact else "float"

    @property
    def eps(self) -> float:
        """Effective equality tolerance (0 in exact mode)."""
        return 0.0 if self.exact else self.tol

    @classmethod
    def from_name(cls, name: str, tol: float = DEFAULT_TOL) -> "ScalarMode":
        if name == "exact":
            return cls(True, tol)
        if name == "float":
            return cls(False, tol)
        raise ValueError(f"unknown scalar mode {name!r} (expected 'exact' or 'float')")

    def coerce(self, x) -> Scalar:
        if self.exact:
            if isinstance(x, float):
                if not math.isfinite(x):
                    raise ValueError(f"non-finite value {x!r}")
                return Fraction(x)
            return Fraction(x)
        x = float(x)
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return x

    def parse(self, text: str) -> Scalar:
        """Parse a decimal, scientific or ``p/q`` literal."""
        text = text.strip()
        if not text:
            raise ValueError("empty numeric literal")
        try:
            value = Fraction(text)
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"not a number: {text!r}") from None
        if self.exact:
            return value
        if "/" in text:
            return float(value)
        # float(text) keeps the usual correctly-rounded decimal conversion
        return float(text)

    def format(self, x: Scalar) -> str:
        return format_scalar(x)

    def eq(self, a: Scalar, b: Scalar) -> bool:
        if self.exact:
            return a == b
        return abs(a - b) <= self.tol

    def lt(self, a: Scalar, b: Scalar) -> bool:
        """Strictly less, beyond the tolerance."""
        if self.exact:
            return a < b
        return b - a > self.tol

    def positive(self, a: Scalar) -> bool:
        return self.lt(0, a)


def _terminating_digits(q: int):
    """Return k such that q divides 10**k, or None if 1/q has no finite decimal."""
    twos = fives = 0
    while q % 2 == 0:
        q //= 2
        twos += 1
    while q % 5 == 0:
        q //= 5
        fives += 1
    if q != 1:
        return None
    return max(twos, fives)


def format_scalar(x: Scalar) -> str:
    """Lossless text for ``x``.

    Fractions print as integers, finite decimals, or ``p/q`` when the reduced
    denominator has prime factors other than 2 and 5. Floats use ``repr``,
    which is the shortest string that reads back to the same double.
    """
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return str(x.numerator)
        k = _terminating_digits(x.denominator)
        if k is None:
            return f"{x.numerator}/{x.denominator}"
        scaled = abs(x.numerator) * 10**k // x.denominator
        sign = "-" if x < 0 else ""
        whole, frac = divmod(scaled, 10**k)
        return f"{sign}{whole}.{frac:0{k}d}".rstrip("0")
    if isinstance(x, int):
        return str(x)
    return repr(float(x))
