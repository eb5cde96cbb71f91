"""Exact numbers of the form a + b*sqrt(q) over the rationals.

Radial kernel identities on the q-ary tree carry half-integer powers of q.
Tracking the sqrt(q) part formally keeps those identities exact, so the
round-trip and equivalence tests can assert equality instead of closeness.
"""

from __future__ import annotations

import math
from fractions import Fraction


def _is_square(q: int) -> bool:
    r = math.isqrt(q)
    return r * r == q


class QSurd:
    """a + b*sqrt(q) with a, b rational and q a fixed positive integer.

    If q is a perfect square the sqrt part is folded into the rational part,
    so equality tests stay unambiguous.
    """

    __slots__ = ("a", "b", "q")

    def __init__(self, q: int, a=0, b=0):
        if q < 1:
            raise ValueError("q must be a positive integer")
        a = Fraction(a)
        b = Fraction(b)
        if b and _is_square(q):
            a += b * math.isqrt(q)
            b = Fraction(0)
        self.q = q
        self.a = a
        self.b = b

    @classmethod
    def sqrt_q_power(cls, q: int, k: int) -> "QSurd":
        """q**(k/2) for integer k (k may be negative)."""
        half, odd = divmod(k, 2)
        base = Fraction(q) ** half
        if odd:
            return cls(q, 0, base)
        return cls(q, base, 0)

    def _check(self, other: "QSurd") -> None:
        if self.q != other.q:
            raise ValueError("mixed surd bases")

    def __add__(self, other):
        other = self._coerce(other)
        self._check(other)
        return QSurd(self.q, self.a + other.a, self.b + other.b)

    def __sub__(self, other):
        other = self._coerce(other)
        self._check(other)
        return QSurd(self.q, self.a - other.a, self.b - other.b)

    def __neg__(self):
        return QSurd(self.q, -self.a, -self.b)

    def __mul__(self, other):
        other = self._coerce(other)
        self._check(other)
        return QSurd(
            self.q,
            self.a * other.a + self.b * other.b * self.q,
            self.a * other.b + self.b * other.a,
        )

    __radd__ = __add__
    __rmul__ = __mul__

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __truediv__(self, other):
        other = self._coerce(other)
        self._check(other)
        den = other.a * other.a - other.b * other.b * other.q
        if den == 0:
            if other.a == 0 and other.b == 0:
                raise ZeroDivisionError("division by zero surd")
            # a^2 = q b^2 with q non-square forces a = b = 0, so other = b*sqrt(q)
            return QSurd(self.q, self.b / other.b, self.a / (other.b * self.q))
        num = self * QSurd(self.q, other.a, -other.b)
        return QSurd(self.q, num.a / den, num.b / den)

    def _coerce(self, other):
        if isinstance(other, QSurd):
            return other
        return QSurd(self.q, Fraction(other), 0)

    def __eq__(self, other):
        other = self._coerce(other)
        return self.q == other.q and self.a == other.a and self.b == other.b

    def __hash__(self):
        return hash((self.q, self.a, self.b))

    def __bool__(self):
        return bool(self.a) or bool(self.b)

    def __float__(self):
        return float(self.a) + float(self.b) * math.sqrt(self.q)

    def is_rational(self) -> bool:
        return self.b == 0

    def as_fraction(self) -> Fraction:
        if self.b != 0:
            raise ValueError(f"{self!r} has a nonzero sqrt({self.q}) part")
        return self.a

    def __repr__(self):
        return f"QSurd({self.q}, {self.a}, {self.b})"
