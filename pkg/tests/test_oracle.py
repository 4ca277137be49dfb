import math

import numpy as np
import pytest

from hillconvex import hill_core as H
from hillconvex import oracle as O
from hillconvex.errors import DomainError

C0 = H.C0


def test_oracle_module_does_not_depend_on_reduction():
    assert "R" not in vars(O) and "reduction" not in vars(O)


def test_disk_grid_covers_boundary():
    g = O.DiskGrid(20, 36, (0.6, 0.1), C0)
    pts = g.points()
    r = np.hypot(pts[:, 0], pts[:, 1])
    assert len(pts) == 1 + 20 * 36
    assert r[0] == 0.0
    assert np.max(r) == pytest.approx(g.radius(), rel=1e-15)
    assert np.count_nonzero(np.isclose(r, g.radius(), rtol=1e-14)) == 36


def test_brute_force_min_on_boundary_and_quarter(rng):
    pairs = O.sample_admissible(rng, 200)
    for q, c in pairs:
        val, s = O.brute_force_fiber_min(q, c, O.DiskGrid(60, 360, q, c))
        assert val > 0
        rho = H.disk_radius(q, c)
        assert math.hypot(*s) == pytest.approx(rho, rel=1e-12)
        th = math.atan2(q[1], q[0])
        rel = (math.atan2(s[1], s[0]) - th) % (2 * math.pi)
        assert rel <= math.pi / 2 + 1e-6


def test_brute_force_no_polish_is_grid_value():
    q, c = (0.6, 0.1), C0 + 0.01
    v0, _ = O.brute_force_fiber_min(q, c, polish=False)
    v1, _ = O.brute_force_fiber_min(q, c)
    assert v1 <= v0
    assert v0 - v1 < 1e-3 * abs(v0)


def test_ring_extremum_count(rng):
    for q, c in O.sample_admissible(rng, 100):
        assert O.ring_extremum_count(q, c) == 2


def test_sample_admissible(rng):
    for q, c in O.sample_admissible(rng, 300):
        r = math.hypot(*q)
        assert r >= 0.54 and q[0] > 0 and q[1] > 0
        assert C0 < c <= 1.5 * q[0] ** 2 + 1 / r


# -- convexity ---------------------------------------------------------------

@pytest.mark.parametrize("p,c", [((0.0, 0.0), 2.3), ((1.5, -0.7), 2.2)])
def test_fiber_convex_examples(p, c):
    v = O.fiber_convexity_check(H.fiber_curve(p, c))
    assert v.convex and v.winding == 1 and v.first_violation is None


def test_limacon_not_convex():
    t = np.linspace(0, 2 * math.pi, 400, endpoint=False)
    r = 1 + 0.8 * np.cos(t)
    v = O.fiber_convexity_check(np.column_stack([r * np.cos(t), r * np.sin(t)]))
    assert not v.convex
    assert v.winding == 1
    assert v.first_violation is not None
    # the dimple faces the negative x-axis
    assert math.cos(t[v.first_violation]) < 0


def test_convexity_check_needs_samples():
    with pytest.raises(DomainError):
        O.fiber_convexity_check(np.zeros((10, 2)))


def test_kepler_limit():
    d10 = O.limit_fiber_deviation(2.2, 10.0)
    d100 = O.limit_fiber_deviation(2.2, 100.0)
    assert d10 < 0.1 and d100 < 1e-2 and d100 < d10


# -- flow ------------------------------------------------------------------

def test_equilibrium_is_stationary():
    a, _, _ = H.critical_data()
    tr = O.flow_integrate(a, C0, 1e-3, 50)
    for s in tr.states:
        assert np.max(np.abs(np.subtract(s.state.as_tuple(), a.as_tuple()))) < 1e-10 * 50


def test_energy_drift_long_run():
    st = O.point_on_level((0.45, 0.1), 2.2, 0.7)
    assert abs(O.K_c(st.as_tuple(), 2.2)) < 1e-14
    tr = O.flow_integrate(st, 2.2, 1e-4, 100_000, record_every=10_000)
    assert not tr.collided
    assert tr.max_drift < 1e-6
    assert len(tr.states) == 11


def test_vector_field_matches_finite_differences():
    z = (0.5, 0.2, 0.3, -0.4)
    c, h = 2.2, 1e-6
    f = O.K_vector_field(z, c)
    grads = []
    for i in range(4):
        zp, zm = list(z), list(z)
        zp[i] += h
        zm[i] -= h
        grads.append((O.K_c(zp, c) - O.K_c(zm, c)) / (2 * h))
    assert f == pytest.approx((grads[2], grads[3], -grads[0], -grads[1]), rel=1e-7, abs=1e-8)


def test_reflection_reverses_time():
    st = O.point_on_level((0.45, 0.1), 2.2, 0.7)
    n = 2000
    fwd = O.flow_integrate(st, 2.2, 1e-4, n, record_every=n)
    end = fwd.states[-1].state
    for img_end, img_start in zip(H.symmetry_images(end), H.symmetry_images(st)):
        back = O.flow_integrate(img_end, 2.2, 1e-4, n, record_every=n).states[-1].state
        assert np.max(np.abs(np.subtract(back.as_tuple(), img_start.as_tuple()))) < 1e-9


def test_collision_flag():
    st = H.PhasePoint(1e-3, 0.0, 0.0, 0.0)
    tr = O.flow_integrate(st, 2.2, 1e-3, 10, collision_radius=1.0)
    assert tr.collided and len(tr.states) == 1


def test_flow_errors():
    with pytest.raises(DomainError):
        O.flow_integrate(H.PhasePoint(0.5, 0, 0, 0), 2.2, 0.0, 10)


# -- serialization and battery ----------------------------------------------

def test_csv_writers(tmp_path):
    st = O.point_on_level((0.45, 0.1), 2.2, 0.7)
    tr = O.flow_integrate(st, 2.2, 1e-3, 20, record_every=5)
    tr.write_csv(tmp_path / "flow.csv", 2.2)
    lines = (tmp_path / "flow.csv").read_text().splitlines()
    assert lines[0] == "t,q1,q2,p1,p2,Kc" and len(lines) == 6
    O.write_disk_scan(tmp_path / "disk.csv", (0.6, 0.1), C0 + 0.01, O.DiskGrid(4, 8, (0.6, 0.1), C0 + 0.01))
    lines = (tmp_path / "disk.csv").read_text().splitlines()
    assert lines[0] == "s1,s2,value" and len(lines) == 1 + 1 + 32


def test_battery_smoke_deterministic():
    a = O.run_battery(trials=20, seed=3, fiber_trials=4, flow_steps=500)
    b = O.run_battery(trials=20, seed=3, fiber_trials=4, flow_steps=500)
    assert a == b
    assert all(r.passed for r in a)
    assert [r.name for r in a][0] == "disk_vs_arc_max_gap"
