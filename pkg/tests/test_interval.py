import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hillconvex.interval import Dual, Interval, boxes, derivative_enclosure, enclose, sup_abs_derivative

fin = st.floats(-1e3, 1e3, allow_nan=False)


def _iv(a, b):
    return Interval(min(a, b), max(a, b))


@settings(max_examples=300, deadline=None)
@given(fin, fin, fin, fin, st.floats(0, 1), st.floats(0, 1))
def test_arithmetic_encloses_point_results(a, b, c, d, s, t):
    X, Y = _iv(a, b), _iv(c, d)
    x = float(np.clip(X.lo + s * (X.hi - X.lo), X.lo, X.hi))
    y = float(np.clip(Y.lo + t * (Y.hi - Y.lo), Y.lo, Y.hi))
    assert (X + Y).contains(x + y)
    assert (X - Y).contains(x - y)
    assert (X * Y).contains(x * y)
    assert (X ** 2).contains(x * x)
    assert (X ** 3).contains(x * x * x)
    if y != 0 and (Y.lo > 0 or Y.hi < 0):
        assert (X / Y).contains(x / y)
    if X.lo >= 0:
        assert X.sqrt().contains(math.sqrt(x))
        if X.lo > 0:
            assert (X ** -0.5).contains(x ** -0.5)
            assert (X ** 1.5).contains(x ** 1.5)
    assert abs(X).contains(abs(x))


def test_even_power_of_straddling_box():
    v = Interval(-2.0, 1.0) ** 2
    assert v.lo == 0.0 and v.hi >= 4.0


def test_division_by_zero_box_rejected():
    with pytest.raises(ZeroDivisionError):
        Interval(1.0, 2.0) / Interval(-1.0, 1.0)


def test_outward_rounding():
    v = Interval(0.1) + Interval(0.2)
    assert v.lo < 0.30000000000000004 or v.lo <= 0.3
    assert v.lo < v.hi


def test_numpy_dispatch():
    X = Interval(4.0, 9.0)
    r = np.sqrt(X)
    assert r.lo <= 2.0 <= r.hi and r.lo <= 3.0 <= r.hi
    assert isinstance(np.sqrt(Dual(4.0, 1.0)), Dual)


def test_dual_derivatives():
    f = lambda x: 3 * x ** 3 - 2 / x + np.sqrt(x) * x
    x0 = 0.7
    d = f(Dual(x0, 1.0))
    exact = 9 * x0 ** 2 + 2 / x0 ** 2 + 1.5 * math.sqrt(x0)
    assert d.val == pytest.approx(f(x0))
    assert d.der == pytest.approx(exact, rel=1e-14)


def test_enclosures():
    f = lambda x: x * x - x
    e = enclose(f, 0.0, 1.0, 100)
    assert np.min(e.lo) <= -0.25 and np.max(e.hi) >= 0.0
    d = derivative_enclosure(f, 0.0, 1.0, 100)
    assert np.min(d.lo) <= -1.0 and np.max(d.hi) >= 1.0
    assert sup_abs_derivative(f, 0.0, 1.0, 100) == pytest.approx(1.0, abs=0.05)
    assert sup_abs_derivative(f, 0.0, 1.0, 100) >= 1.0


def test_boxes_cover_range():
    b = boxes(0.2, 0.7, 13)
    assert b.lo[0] == 0.2 and b.hi[-1] == 0.7
    assert np.all(b.hi[:-1] == b.lo[1:])


def test_bad_interval():
    with pytest.raises(ValueError):
        Interval(1.0, 0.0)
