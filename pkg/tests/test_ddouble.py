"""Compensated double-double arithmetic against an mpmath oracle."""

import mpmath as mp
import numpy as np
import pytest

from chaosbench.ddouble import (DD_ONE, DD_ZERO, DDouble, dd_add, dd_div,
                                dd_mul, dd_sub, two_prod, two_sum)

mp.mp.dps = 50


def mpf_of(x):
    return mp.mpf(x.hi) + mp.mpf(x.lo)


@pytest.mark.parametrize("op,mp_op", [
    (lambda a, b: a + b, lambda a, b: a + b),
    (lambda a, b: a - b, lambda a, b: a - b),
    (lambda a, b: a * b, lambda a, b: a * b),
    (lambda a, b: a / b, lambda a, b: a / b),
])
def test_arithmetic_against_mpmath(op, mp_op):
    rng = np.random.default_rng(5)
    for _ in range(300):
        a = DDouble(rng.standard_normal(), rng.standard_normal() * 1e-17)
        b = DDouble(rng.standard_normal(), rng.standard_normal() * 1e-17)
        if abs(float(b)) < 1e-3:
            b = b + DD_ONE
        got = mpf_of(op(a, b))
        want = mp_op(mpf_of(a), mpf_of(b))
        err = abs(got - want)
        assert err <= abs(want) * mp.mpf(2) ** -100


def test_two_sum_exact():
    # two_sum returns the exact error term of the float64 addition
    rng = np.random.default_rng(1)
    for _ in range(500):
        a = rng.standard_normal() * 10.0 ** float(rng.integers(-10, 10))
        b = rng.standard_normal() * 10.0 ** float(rng.integers(-10, 10))
        s, e = two_sum(a, b)
        assert mp.mpf(s) + mp.mpf(e) == mp.mpf(a) + mp.mpf(b)


def test_two_prod_exact():
    rng = np.random.default_rng(2)
    for _ in range(500):
        a = rng.standard_normal()
        b = rng.standard_normal()
        p, e = two_prod(a, b)
        assert mp.mpf(p) + mp.mpf(e) == mp.mpf(a) * mp.mpf(b)


def test_from_string_pi():
    pi = DDouble.from_string("3.14159265358979323846264338327950288")
    assert abs(mpf_of(pi) - mp.pi) < mp.mpf(1e-32)


def test_to_decimal_string_roundtrip():
    x = DDouble.from_string("1.41421356237309504880168872420969808")
    s = x.to_decimal_string(36)
    y = DDouble.from_string(s)
    assert abs(mpf_of(x) - mpf_of(y)) < mp.mpf(1e-33)


def test_kernel_level_ops_match_class():
    a = DDouble(1.7, 3e-18)
    b = DDouble(-0.3, -2e-19)
    assert dd_add(a.hi, a.lo, b.hi, b.lo) == ((a + b).hi, (a + b).lo)
    assert dd_sub(a.hi, a.lo, b.hi, b.lo) == ((a - b).hi, (a - b).lo)
    assert dd_mul(a.hi, a.lo, b.hi, b.lo) == ((a * b).hi, (a * b).lo)
    assert dd_div(a.hi, a.lo, b.hi, b.lo) == ((a / b).hi, (a / b).lo)


def test_comparisons_and_constants():
    assert DD_ZERO < DD_ONE
    assert DDouble(1.0, 1e-20) > DD_ONE
    assert DDouble(2.0) == DDouble(2.0, 0.0)
    assert abs(DDouble(-3.5)) == DDouble(3.5)
    assert not DD_ZERO
    assert DD_ONE.is_finite()
    assert not DDouble(float("inf")).is_finite()


def test_accumulation_beats_double():
    # summing 1e5 copies of 0.1: dd error stays ~1e-28, float64 drifts
    dd = DD_ZERO
    tenth = DDouble.from_string("0.1")
    f = 0.0
    for _ in range(100_000):
        dd = dd + tenth
        f += 0.1
    exact = mp.mpf(1) / 10 * 100_000
    # the dd sum of the *exactly represented* dd tenth
    assert abs(mpf_of(dd) - 100_000 * mpf_of(tenth)) < mp.mpf(1e-25)
    assert abs(mp.mpf(f) - exact) > mp.mpf(1e-10)
