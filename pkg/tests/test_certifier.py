import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hillconvex import certifier as C
from hillconvex import figures as FIG
from hillconvex.errors import ConfigError, SweepError
from hillconvex.hill_core import X_CRIT


# -- lattices --------------------------------------------------------------

@settings(max_examples=200, deadline=None)
@given(st.floats(-5, 5), st.floats(1e-3, 3), st.floats(1e-3, 0.5))
def test_lattice_covers_closed_interval(lo, width, eps):
    hi = lo + width
    pts = C.lattice(lo, hi, eps)
    assert pts[0] == lo and pts[-1] == hi
    gaps = np.diff(pts)
    assert np.all(gaps > 0)
    # lo + i*eps is rounded, so gaps exceed eps by a few ulps of the points;
    # the factor-2 slack between m > eps*B and the half-cell bound absorbs it
    assert np.max(gaps) <= eps * (1 + 1e-12) + 8 * np.spacing(max(abs(lo), abs(hi)))
    assert len(pts) == C.lattice_size(lo, hi, eps)


def test_lattice_chunks_concatenate():
    full = C.lattice(0.0, 1.0, 0.013)
    n = len(full)
    parts = [C.lattice_chunk(0.0, 1.0, 0.013, s, s + 7) for s in range(0, n, 7)]
    assert np.array_equal(np.concatenate(parts), full)


def test_grid_spec_validation():
    with pytest.raises(ConfigError):
        C.Grid1DSpec(1.0, 0.0, 0.1, 1.0)
    with pytest.raises(ConfigError):
        C.Grid1DSpec(0.0, 1.0, 0.0, 1.0)
    with pytest.raises(ConfigError):
        C.Grid1DSpec(0.0, 1.0, 0.1, -1.0)


# -- one variable ----------------------------------------------------------

def test_constant_function():
    m, w = C.sweep_min_1d(lambda x: np.ones_like(x), C.Grid1DSpec(0.2, 0.9, 1e-3, 1.0))
    assert m == 1.0 and w == 0.2


def test_identity_fails():
    c = C.certify_positive_1d(lambda x: x, C.Grid1DSpec(0.0, 1.0, 0.1, 1.0))
    assert c.m == 0.0 and c.witness == 0.0
    assert c.verdict == "fail" and not c.passed


def test_sweep_error_carries_point():
    with pytest.raises(SweepError, match="0.5"):
        C.sweep_min_1d(lambda x: 1 / (x - 0.5), C.Grid1DSpec(0.0, 1.0, 0.25, 1.0))


def test_sweep_min_block_independent():
    f = lambda x: np.cos(37 * x) + x
    spec = C.Grid1DSpec(0.0, 2.0, 1e-4, 40.0)
    assert C.sweep_min_1d(f, spec) == C.sweep_min_1d(f, spec, block=1000) == C.sweep_min_1d(f, spec, block=7)


def test_float_budget():
    assert C.float_error_budget(C.FloatMeta(200, 1e4)) == pytest.approx(200 * 1e4 * 2 ** -52 * 8)
    assert C.float_error_budget(C.FloatMeta(200, 1e4)) < 3.6e-9
    assert C.float_error_budget(C.FloatMeta(0, 1e4)) == 0.0
    assert C.float_error_budget(None) == 0.0


def test_certificate_invariant():
    c = C.Certificate1D("t", "f", (0, 1), 1e-3, 10.0, 0.0105, 0.5, 1e-4)
    assert c.passed == (0.0105 - 1e-2 - 1e-4 > 0)
    c = C.Certificate1D("t", "f", (0, 1), 1e-3, 10.0, 0.0099, 0.5, 0.0)
    assert not c.passed
    c = C.Certificate1D("t", "f", (0, 1), 1e-3, 10.0, 1.0, 0.5, 0.0, B_source="constant-violated")
    assert not c.passed and c.recheck()


def _poly_cases(n=50, seed=7):
    """Random q = p^2 + shift on [0, 1] with p a cubic with roots in [0, 1]:
    positive minimum for shift > 0, a negative dip for shift < 0."""
    rng = np.random.default_rng(seed)
    for i in range(n):
        p = np.poly1d(np.poly(rng.uniform(0, 1, 3)))
        shift = rng.uniform(1e-4, 0.02) * (1 if i % 2 else -1)
        q = p * p + shift
        B = float(np.sum(np.abs(q.deriv().coeffs)))     # sup |q'| on [0, 1]
        yield q, B, shift


def test_soundness_harness():
    n_pass = 0
    for q, B, shift in _poly_cases():
        cert = C.certify_positive_1d(q, C.Grid1DSpec(0.0, 1.0, 1e-4, B))
        fine = np.min(q(C.lattice(0.0, 1.0, 1e-5)))
        if shift < 0:
            assert fine < 0
        if cert.passed:
            assert fine > 0 and shift > 0
            n_pass += 1
    assert n_pass > 5


def test_dip_between_lattice_points_not_certified():
    eps = 0.1
    f = lambda x: 0.19 - 0.2 * np.sin(math.pi * x / eps) ** 2     # zero at lattice points + 0.19
    B = 0.2 * math.pi / eps
    c = C.certify_positive_1d(f, C.Grid1DSpec(0.0, 1.0, eps, B))
    assert c.m == pytest.approx(0.19)
    assert not c.passed


# -- two variables ---------------------------------------------------------

def test_sweep_max_constant():
    M, w = C.sweep_max_2d(lambda x, u: -np.ones(np.broadcast(x, u).shape), ((0, 1), (0, 1)), 0.1, 0.1)
    assert M == -1.0 and w == (0.0, 0.0)


def test_sweep_max_quadratic():
    F = lambda x, u: -(x - 0.65) ** 2 - (u - 0.5) ** 2
    rect = ((0.63, X_CRIT), (0.0, 1.0))
    M, w = C.sweep_max_2d(F, rect, 1e-3, 1e-3)
    xs = C.lattice(0.63, X_CRIT, 1e-3)
    us = C.lattice(0.0, 1.0, 1e-3)
    i, j = np.argmin(np.abs(xs - 0.65)), np.argmin(np.abs(us - 0.5))
    assert w == (xs[i], us[j])
    assert M == pytest.approx(F(xs[i], us[j]), abs=0)
    assert -2e-6 < M <= 0


def test_positive_F_fails():
    c = C.certify_negative_2d(lambda x, u: 1 + 0 * x * u, ((0, 1), (0, 1)), 0.1, 0.1, 1.0, 1.0)
    assert c.M == 1.0 and not c.passed


def test_2d_certificate_invariant():
    c = C.Certificate2D("t", "F", ((0, 1), (0, 1)), 0.1, 0.2, 10.0, 10.0, -2.5, (0, 0), 0.0)
    assert c.margin_x == pytest.approx(1.5) and c.margin_u == pytest.approx(0.5)
    assert c.passed and c.recheck()
    c = C.Certificate2D("t", "F", ((0, 1), (0, 1)), 0.1, 0.3, 10.0, 10.0, -2.5, (0, 0), 0.0)
    assert not c.passed and c.recheck()


@pytest.mark.parametrize("sharp", [False, True])
def test_determinism_across_stripes(sharp):
    F = C.F_sharp if sharp else C.F_reference
    rect = C.FINAL_RECT
    res = {s: C.sweep_max_2d(F, rect, 1e-3, 2e-3, stripes=s) for s in (1, 2, 8, 16)}
    assert len(set(res.values())) == 1
    assert C.sweep_max_2d(F, rect, 1e-3, 2e-3, stripes=8, workers=2) == res[1]


def test_tie_break_prefers_smaller_point():
    F = lambda x, u: np.zeros(np.broadcast(x, u).shape)
    for s in (1, 3, 5):
        assert C.sweep_max_2d(F, ((0, 1), (0, 1)), 0.1, 0.1, stripes=s) == (0.0, (0.0, 0.0))


def test_sweep_max_config_errors():
    with pytest.raises(ConfigError):
        C.sweep_max_2d(C.F_sharp, ((1, 0), (0, 1)), 0.1, 0.1)
    with pytest.raises(ConfigError):
        C.sweep_max_2d(C.F_sharp, ((0, 1), (0, 1)), 0.1, 0.1, stripes=0)


def test_shrunk_rectangle_coarse():
    """A coarse sweep on a subset of the final rectangle: the sharp function
    is far below zero there."""
    rect = ((0.69, X_CRIT), (0.0, 1.0))
    M, _ = C.sweep_max_2d(C.F_sharp, rect, 1e-4, 1e-3)
    Mfull, _ = C.sweep_max_2d(C.F_sharp, C.FINAL_RECT, 1e-4, 1e-3)
    assert M < 0 and M <= Mfull + 1e-9 or M < -300


# -- figure suite pieces ---------------------------------------------------

def test_measured_derivative_below_constant():
    for r in FIG.figure_rows():
        assert C.measured_max_derivative(r.g, r.lo, r.hi) < C.REF_B_1D


def test_rigorous_bound_dominates_measured():
    for r in FIG.figure_rows()[:6]:
        assert C.rigorous_derivative_bound(r.g, r.lo, r.hi, n=4000) >= C.measured_max_derivative(r.g, r.lo, r.hi)


def test_figure_suite_coarse_eps_fails():
    certs = C.figure_suite("constant", eps=1e-2, only=["fig2", "fig10"])
    assert all(not c.passed for c in certs)
    assert all(not c.certifying for c in certs)


def test_figure_suite_unknown_id():
    with pytest.raises(ConfigError):
        C.figure_suite("constant", only=["fig3"])
    with pytest.raises(ConfigError):
        C.figure_suite("lax")


def test_single_row_values():
    c, = C.figure_suite("constant", only=["fig2"])
    assert c.m == pytest.approx(0.3524, abs=2e-4)
    assert c.passed
    c, = C.figure_suite("constant", only=["fig14m"])
    assert c.m == pytest.approx(0.5905, abs=2e-4)


# -- reports ---------------------------------------------------------------

def test_report_round_trip():
    certs = C.figure_suite("rigorous", only=["fig2", "fig9"])
    text = C.render_report([(c.id, c.to_items()) for c in certs], {"command": "test"})
    assert text.startswith(f"format: {C.REPORT_VERSION}\n")
    parsed = C.parse_report(text)
    assert parsed[""]["command"] == "test"
    for c in certs:
        back = C.certificate1d_from_items(parsed[c.id])
        assert back.verdict == c.verdict
        assert back.m == c.m and back.B == c.B and back.eps == c.eps
        assert back.recheck()
    assert [k for k, _ in certs[0].to_items()][:3] == ["id", "function", "interval"]


def test_number_rendering():
    assert C._fmt(0.1) == "0.10000000000000001"
    assert C._fmt(True) == "true"
    assert C._fmt((1.0, 2.5)) == "[1, 2.5]"
