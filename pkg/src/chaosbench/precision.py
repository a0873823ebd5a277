"""Floating-point precision levels and precision-tagged scalars.

Three precision levels thread through every numeric path in the package:

* ``single``   -- IEEE binary32, unit roundoff 2**-24 (~7 decimal digits)
* ``double``   -- IEEE binary64, unit roundoff 2**-53 (~16 decimal digits)
* ``extended`` -- compensated double-double (106-bit significand,
  ~32 decimal digits); see :mod:`chaosbench.ddouble`

Scalars are realized with native types: ``numpy.float32`` / ``numpy.float64``
scalars (whose dtype *is* the precision tag) and :class:`~chaosbench.ddouble.DDouble`
for extended.  Single-precision paths operate on float32 values end to end,
so every intermediate is genuinely rounded to a 24-bit significand -- there
is no "compute in double, cast at the end" shortcut anywhere.
"""

from __future__ import annotations

import enum
import functools

import numpy as np

from .ddouble import DDouble


@functools.total_ordering
class Precision(enum.Enum):
    SINGLE = "single"
    DOUBLE = "double"
    EXTENDED = "extended"

    def __lt__(self, other):
        if not isinstance(other, Precision):
            return NotImplemented
        return _ORDER[self] < _ORDER[other]

    def __str__(self):
        return self.value

    @classmethod
    def parse(cls, s):
        """Parse the CLI/file-header strings 'single' | 'double' | 'extended'."""
        try:
            return cls(s.strip().lower())
        except ValueError:
            raise ValueError(f"unknown precision {s!r}; "
                             f"expected one of single, double, extended") from None

    @property
    def dtype(self):
        """numpy dtype used for bulk storage (extended stores hi/lo float64 pairs)."""
        return np.float32 if self is Precision.SINGLE else np.float64

    @property
    def decimal_digits(self):
        """Significant digits guaranteeing shortest round-trip serialization."""
        return {Precision.SINGLE: 9, Precision.DOUBLE: 17,
                Precision.EXTENDED: 36}[self]


_ORDER = {Precision.SINGLE: 0, Precision.DOUBLE: 1, Precision.EXTENDED: 2}

SINGLE = Precision.SINGLE
DOUBLE = Precision.DOUBLE
EXTENDED = Precision.EXTENDED


def epsilon(prec):
    """Machine epsilon (gap between 1 and the next representable value)."""
    if prec is Precision.SINGLE:
        return np.float32(2.0 ** -23)
    if prec is Precision.DOUBLE:
        return np.float64(2.0 ** -52)
    # double-double: ulp of the lo word of 1.0
    return DDouble(2.0 ** -104)


def precision_of(x):
    """Infer the precision tag of a scalar or array."""
    if isinstance(x, DDouble):
        return Precision.EXTENDED
    dt = getattr(x, "dtype", None)
    if dt is not None:
        if dt == np.float32:
            return Precision.SINGLE
        if dt == np.float64:
            return Precision.DOUBLE
        raise TypeError(f"unsupported dtype {dt}")
    if isinstance(x, float):
        return Precision.DOUBLE
    raise TypeError(f"cannot infer precision of {type(x).__name__}")


def cast(x, target):
    """Round a scalar (or float array) to the target precision.

    Idempotent when x already has the target precision.  Overflow follows
    standard IEEE semantics (saturates to inf).  Note rounding a DDouble to
    single goes through its double-rounded value hi+lo; the discrepancy from
    a single correctly-rounded conversion is confined to ties at the
    2**-29 level and is irrelevant at the tolerances used here.
    """
    if isinstance(x, DDouble):
        if target is Precision.EXTENDED:
            return x
        v = x.hi + x.lo
        return np.float32(v) if target is Precision.SINGLE else np.float64(v)
    if isinstance(x, np.ndarray):
        if target is Precision.EXTENDED:
            raise TypeError("cast of arrays to extended is not supported; "
                            "use dynamics helpers for extended trajectories")
        return np.ascontiguousarray(x, dtype=target.dtype)
    v = float(x)
    if target is Precision.SINGLE:
        return np.float32(v)
    if target is Precision.DOUBLE:
        return np.float64(v)
    return DDouble(v)


def format_scalar(x, prec=None):
    """Shortest round-trip decimal string at the scalar's precision."""
    if prec is None:
        prec = precision_of(x)
    if prec is Precision.EXTENDED:
        return x.to_decimal_string(prec.decimal_digits)
    if prec is Precision.SINGLE:
        return np.format_float_scientific(np.float32(x), unique=True)
    return repr(float(x))


def parse_scalar(s, prec):
    """Parse a decimal string to a scalar of the given precision."""
    if prec is Precision.SINGLE:
        return np.float32(s)
    if prec is Precision.DOUBLE:
        return np.float64(s)
    return DDouble.from_string(s)
