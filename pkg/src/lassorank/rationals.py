"""Exact scalar arithmetic: rationals and infinitesimally-shifted rationals.

Plain rationals are ``fractions.Fraction`` (arbitrary precision, always
canonical).  ``Eps`` values of the form a + b*eps, with eps an infinitesimal,
are used to resolve strict inequalities in the LP engine: a strict bound
``t < b`` becomes ``t <= b - eps`` and the simplex runs over the ordered
field Q[eps] restricted to eps-affine elements (the tableau matrix itself
stays purely rational, so closure under pivoting holds).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Union

Rat = Fraction

Scalar = Union[int, Fraction, "Eps"]


def rat(value) -> Fraction:
    """Coerce ints, strings like '3/4' or '-2', or Fractions to Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational")


def format_rat(value: Fraction) -> str:
    """Render as 'p' or 'p/q' with q > 0."""
    value = rat(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


class Eps:
    """An eps-affine scalar a + b*eps over Q, ordered lexicographically."""

    __slots__ = ("a", "b")

    def __init__(self, a, b=0):
        self.a = rat(a)
        self.b = rat(b)

    # -- helpers -------------------------------------------------------

    @staticmethod
    def lift(x) -> "Eps":
        if isinstance(x, Eps):
            return x
        return Eps(rat(x))

    def is_rational(self) -> bool:
        return self.b == 0

    def realize(self, eps0: Fraction) -> Fraction:
        return self.a + self.b * eps0

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other):
        o = Eps.lift(other)
        return Eps(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __sub__(self, other):
        o = Eps.lift(other)
        return Eps(self.a - o.a, self.b - o.b)

    def __rsub__(self, other):
        o = Eps.lift(other)
        return Eps(o.a - self.a, o.b - self.b)

    def __neg__(self):
        return Eps(-self.a, -self.b)

    def __mul__(self, other):
        # only scalar (purely rational) multipliers are meaningful here
        if isinstance(other, Eps):
            if not other.is_rational():
                raise ArithmeticError("eps*eps is not representable")
            other = other.a
        c = rat(other)
        return Eps(self.a * c, self.b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Eps):
            if not other.is_rational():
                raise ArithmeticError("division by an eps-affine value")
            other = other.a
        c = rat(other)
        return Eps(self.a / c, self.b / c)

    # -- order ---------------------------------------------------------

    def _key(self):
        return (self.a, self.b)

    def _cmp(self, other):
        o = Eps.lift(other)
        if self.a != o.a:
            return -1 if self.a < o.a else 1
        if self.b != o.b:
            return -1 if self.b < o.b else 1
        return 0

    def __eq__(self, other):
        if not isinstance(other, (Eps, int, Fraction)):
            return NotImplemented
        return self._cmp(other) == 0

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash(self._key())

    def __repr__(self):
        if self.b == 0:
            return format_rat(self.a)
        return f"({format_rat(self.a)}{'+' if self.b > 0 else '-'}{format_rat(abs(self.b))}eps)"


def eps_part(x) -> Fraction:
    return x.b if isinstance(x, Eps) else Fraction(0)


def rat_part(x) -> Fraction:
    return x.a if isinstance(x, Eps) else rat(x)
