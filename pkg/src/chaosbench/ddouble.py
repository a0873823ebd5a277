"""Compensated double-double arithmetic.

The extended ("reference") precision used throughout this package is
double-double: an unevaluated sum hi + lo of two IEEE binary64 values with
|lo| <= ulp(hi)/2.  This gives a 106-bit significand, i.e. about 32
significant decimal digits.  The representation is fixed repo-wide; see
:mod:`chaosbench.precision`.

The low-level primitives (two_sum, two_prod, ...) are numba-jitted scalar
functions so the integrator kernels in :mod:`chaosbench.kernels` can reuse
the exact same arithmetic at machine speed.  They are also callable from
plain Python, which is how the :class:`DDouble` wrapper uses them.
"""

from __future__ import annotations

from decimal import Decimal, localcontext
from fractions import Fraction

import numba

_SPLITTER = 134217729.0  # 2**27 + 1, Dekker splitting constant


@numba.njit(cache=True, inline="always")
def two_sum(a, b):
    """Exact sum: returns (s, e) with s = fl(a+b) and a + b = s + e."""
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


@numba.njit(cache=True, inline="always")
def quick_two_sum(a, b):
    """two_sum assuming |a| >= |b|."""
    s = a + b
    e = b - (s - a)
    return s, e


@numba.njit(cache=True, inline="always")
def split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    lo = a - hi
    return hi, lo


@numba.njit(cache=True, inline="always")
def two_prod(a, b):
    """Exact product: returns (p, e) with p = fl(a*b) and a*b = p + e."""
    p = a * b
    ah, al = split(a)
    bh, bl = split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


@numba.njit(cache=True, inline="always")
def dd_add(ahi, alo, bhi, blo):
    s1, s2 = two_sum(ahi, bhi)
    t1, t2 = two_sum(alo, blo)
    s2 += t1
    s1, s2 = quick_two_sum(s1, s2)
    s2 += t2
    return quick_two_sum(s1, s2)


@numba.njit(cache=True, inline="always")
def dd_neg(ahi, alo):
    return -ahi, -alo


@numba.njit(cache=True, inline="always")
def dd_sub(ahi, alo, bhi, blo):
    return dd_add(ahi, alo, -bhi, -blo)


@numba.njit(cache=True, inline="always")
def dd_mul(ahi, alo, bhi, blo):
    p1, p2 = two_prod(ahi, bhi)
    p2 += ahi * blo + alo * bhi
    return quick_two_sum(p1, p2)


@numba.njit(cache=True, inline="always")
def dd_div(ahi, alo, bhi, blo):
    q1 = ahi / bhi
    # r = a - q1*b
    thi, tlo = dd_mul(q1, 0.0, bhi, blo)
    rhi, rlo = dd_sub(ahi, alo, thi, tlo)
    q2 = rhi / bhi
    thi, tlo = dd_mul(q2, 0.0, bhi, blo)
    rhi, rlo = dd_sub(rhi, rlo, thi, tlo)
    q3 = rhi / bhi
    q1, q2 = quick_two_sum(q1, q2)
    return dd_add(q1, q2, q3, 0.0)


class DDouble:
    """Immutable double-double scalar with standard operator overloads.

    Mixed arithmetic with Python ints/floats and numpy float64 scalars is
    supported (the other operand is taken as exact).
    """

    __slots__ = ("hi", "lo")

    def __init__(self, hi=0.0, lo=0.0):
        self.hi = float(hi)
        self.lo = float(lo)

    # -- construction -------------------------------------------------

    @classmethod
    def from_string(cls, s):
        """Parse a decimal string exactly (to double-double precision)."""
        frac = Fraction(s)
        hi = float(frac)
        lo = float(frac - Fraction(hi))
        return cls(hi, lo)

    @classmethod
    def _coerce(cls, x):
        if isinstance(x, DDouble):
            return x
        if isinstance(x, (int, float)):
            return cls(float(x))
        try:
            return cls(float(x))  # numpy scalars
        except (TypeError, ValueError):
            return NotImplemented

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return DDouble(*dd_add(self.hi, self.lo, other.hi, other.lo))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return DDouble(*dd_sub(self.hi, self.lo, other.hi, other.lo))

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return DDouble(*dd_sub(other.hi, other.lo, self.hi, self.lo))

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return DDouble(*dd_mul(self.hi, self.lo, other.hi, other.lo))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return DDouble(*dd_div(self.hi, self.lo, other.hi, other.lo))

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return DDouble(*dd_div(other.hi, other.lo, self.hi, self.lo))

    def __neg__(self):
        return DDouble(-self.hi, -self.lo)

    def __pos__(self):
        return self

    def __abs__(self):
        return -self if self.hi < 0.0 else self

    # -- comparison ----------------------------------------------------

    def _cmp(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.hi != other.hi:
            return -1 if self.hi < other.hi else 1
        if self.lo != other.lo:
            return -1 if self.lo < other.lo else 1
        return 0

    def __eq__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is NotImplemented else c == 0

    def __lt__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is NotImplemented else c < 0

    def __le__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is NotImplemented else c <= 0

    def __gt__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is NotImplemented else c > 0

    def __ge__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is NotImplemented else c >= 0

    def __hash__(self):
        return hash((self.hi, self.lo))

    # -- conversion ----------------------------------------------------

    def __float__(self):
        return self.hi + self.lo

    def __bool__(self):
        return self.hi != 0.0 or self.lo != 0.0

    def is_finite(self):
        import math

        return math.isfinite(self.hi) and math.isfinite(self.lo)

    def to_decimal_string(self, digits=36):
        """Round-trip decimal representation (36 digits covers 106 bits)."""
        with localcontext() as ctx:
            ctx.prec = digits
            d = Decimal(self.hi) + Decimal(self.lo)
            return str(+d)

    def __repr__(self):
        return f"DDouble({self.hi!r}, {self.lo!r})"

    def __str__(self):
        return self.to_decimal_string()


DD_ZERO = DDouble(0.0)
DD_ONE = DDouble(1.0)
