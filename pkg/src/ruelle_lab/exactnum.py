"""Exact scalar arithmetic over Q + Q*pi.

Resonance data built from rational Lyapunov exponents, rational (or
rational-multiple-of-pi) periods and rational holonomy exponents only ever
produces numbers of the form a + b*pi with rational a, b.  Since pi is
irrational, equality and ordering of such numbers is decidable, which is what
makes multiplicity counting exact.  Ordering against pi itself is settled with
a 49-digit rational enclosure; data derived from desk-scale rationals can never
fall inside it.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

RationalLike = Union[int, Fraction]

_PI_LO = Fraction(31415926535897932384626433832795028841971693993751, 10**49)
_PI_HI = Fraction(31415926535897932384626433832795028841971693993752, 10**49)


class AmbiguousComparisonError(ArithmeticError):
    """A comparison fell inside the rational enclosure of pi."""


class ExactDomainError(ArithmeticError):
    """An operation left the Q + Q*pi domain (e.g. pi*pi)."""


def _coerce_rational(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        # every double is an exact rational; Fraction(x) is lossless
        return Fraction(x)
    raise TypeError(f"expected int, float or Fraction, got {type(x).__name__}")


class Exact:
    """A number a + b*pi with exact rational components."""

    __slots__ = ("a", "b")

    def __init__(self, a: RationalLike = 0, b: RationalLike = 0):
        object.__setattr__(self, "a", _coerce_rational(a))
        object.__setattr__(self, "b", _coerce_rational(b))

    def __setattr__(self, name, value):
        raise AttributeError("Exact values are immutable")

    # -- constructors -------------------------------------------------

    @staticmethod
    def pi(coeff: RationalLike = 1) -> "Exact":
        return Exact(0, coeff)

    @staticmethod
    def of(x) -> "Exact":
        if isinstance(x, Exact):
            return x
        return Exact(_coerce_rational(x))

    # -- ring operations ----------------------------------------------

    def __add__(self, other):
        other = Exact.of(other)
        return Exact(self.a + other.a, self.b + other.b)

    __radd__ = __add__

    def __sub__(self, other):
        other = Exact.of(other)
        return Exact(self.a - other.a, self.b - other.b)

    def __rsub__(self, other):
        return Exact.of(other) - self

    def __neg__(self):
        return Exact(-self.a, -self.b)

    def __mul__(self, other):
        other = Exact.of(other)
        if self.b and other.b:
            raise ExactDomainError("product has a pi^2 component")
        return Exact(
            self.a * other.a,
            self.a * other.b + self.b * other.a,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = Exact.of(other)
        if other.a == 0 and other.b == 0:
            raise ZeroDivisionError("division by zero Exact")
        if other.b == 0:
            return Exact(self.a / other.a, self.b / other.a)
        if other.a == 0:
            # (a + b*pi) / (q*pi) stays in the domain only when a == 0
            if self.a != 0:
                raise ExactDomainError("division introduces 1/pi")
            return Exact(self.b / other.b)
        raise ExactDomainError("division by a mixed a + b*pi value")

    def __rtruediv__(self, other):
        return Exact.of(other) / self

    # -- order and equality -------------------------------------------

    def sign(self) -> int:
        if self.b == 0:
            return (self.a > 0) - (self.a < 0)
        # sign of a + b*pi: compare pi against -a/b
        ratio = -self.a / self.b
        if ratio < _PI_LO:
            return 1 if self.b > 0 else -1
        if ratio > _PI_HI:
            return -1 if self.b > 0 else 1
        raise AmbiguousComparisonError(
            f"cannot resolve sign of {self!r} within the pi enclosure"
        )

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, Exact)):
            other = Exact.of(other)
            return self.a == other.a and self.b == other.b
        return NotImplemented

    def __hash__(self):
        return hash((self.a, self.b))

    def __lt__(self, other):
        return (self - Exact.of(other)).sign() < 0

    def __le__(self, other):
        return (self - Exact.of(other)).sign() <= 0

    def __gt__(self, other):
        return (self - Exact.of(other)).sign() > 0

    def __ge__(self, other):
        return (self - Exact.of(other)).sign() >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __bool__(self):
        return self.a != 0 or self.b != 0

    # -- conversions ----------------------------------------------------

    def is_rational(self) -> bool:
        return self.b == 0

    def as_fraction(self) -> Fraction:
        if self.b != 0:
            raise ExactDomainError(f"{self!r} has a pi component")
        return self.a

    def __float__(self):
        return float(self.a) + float(self.b) * math.pi

    def floor(self) -> int:
        """Largest integer <= self, exact thanks to the pi enclosure."""
        if self.b == 0:
            return math.floor(self.a)
        lo = self.a + self.b * (_PI_LO if self.b > 0 else _PI_HI)
        hi = self.a + self.b * (_PI_HI if self.b > 0 else _PI_LO)
        f_lo, f_hi = math.floor(lo), math.floor(hi)
        if f_lo != f_hi:
            raise AmbiguousComparisonError(f"floor of {self!r} is ambiguous")
        return f_lo

    def ceil(self) -> int:
        return -((-self).floor())

    def __repr__(self):
        if self.b == 0:
            return f"Exact({self.a})"
        if self.a == 0:
            return f"Exact({self.b}*pi)"
        return f"Exact({self.a} + {self.b}*pi)"


class ExactComplex:
    """Complex number with Exact real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", Exact.of(re))
        object.__setattr__(self, "im", Exact.of(im))

    def __setattr__(self, name, value):
        raise AttributeError("ExactComplex values are immutable")

    @staticmethod
    def of(x) -> "ExactComplex":
        if isinstance(x, ExactComplex):
            return x
        if isinstance(x, (int, Fraction, Exact)):
            return ExactComplex(Exact.of(x), Exact(0))
        raise TypeError(f"cannot coerce {type(x).__name__} to ExactComplex")

    def __add__(self, other):
        other = ExactComplex.of(other)
        return ExactComplex(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = ExactComplex.of(other)
        return ExactComplex(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return ExactComplex.of(other) - self

    def __neg__(self):
        return ExactComplex(-self.re, -self.im)

    def __mul__(self, other):
        """Product; at least one factor must be real or the pi parts trivial."""
        if isinstance(other, (int, Fraction, Exact)):
            s = Exact.of(other)
            return ExactComplex(self.re * s, self.im * s)
        other = ExactComplex.of(other)
        return ExactComplex(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def times_i(self) -> "ExactComplex":
        return ExactComplex(-self.im, self.re)

    def conjugate(self) -> "ExactComplex":
        return ExactComplex(self.re, -self.im)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, Exact, ExactComplex)):
            other = ExactComplex.of(other)
            return self.re == other.re and self.im == other.im
        return NotImplemented

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"ExactComplex({self.re!r}, {self.im!r})"


EXACT_ZERO = Exact(0)
EXACT_PI = Exact.pi()
