"""Brute-force and dynamical cross-checks.

The brute-force routines never use the closed forms of
:mod:`hillconvex.reduction`; their only inputs are the raw Hamiltonian, the
vector w(q) and the Hessian from :mod:`hillconvex.hill_core`.  The battery at
the end compares the two code paths.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError
from .hill_core import (C0, Q2_BOUND, X_CRIT, FiberCurve, PhasePoint, _c, disk_radius,
                        fiber_curve, hessian, shifted_w, tangent_v, winding_number)


# --------------------------------------------------------------------------
# Disk minimum

@dataclass(frozen=True)
class DiskGrid:
    n_radial: int
    n_angular: int
    q: Tuple[float, float]
    c: float

    def radius(self) -> float:
        return disk_radius(self.q, self.c)

    def points(self) -> np.ndarray:
        """Centre, area-uniform interior rings, and the boundary ring."""
        rho = self.radius()
        rad = rho * np.sqrt(np.arange(1, self.n_radial + 1) / self.n_radial)
        ang = 2 * math.pi * np.arange(self.n_angular) / self.n_angular
        R, A = np.meshgrid(rad, ang, indexing="ij")
        pts = np.column_stack([(R * np.cos(A)).ravel(), (R * np.sin(A)).ravel()])
        return np.vstack([[0.0, 0.0], pts])


def _quad_form(q, s1, s2):
    w1, w2 = shifted_w(q)
    return hessian(q).quad((w1 + s1, w2 + s2))


def brute_force_fiber_min(q, c, grid: Optional[DiskGrid] = None,
                          polish: bool = True) -> Tuple[float, Tuple[float, float]]:
    """min over |s| <= rho of (w + s)^T Hess (w + s), and the minimizing s.

    The grid minimum is refined by a bounded scalar search along the ring it
    lies on, within one angular step either side."""
    c = _c(c)
    grid = grid or DiskGrid(200, 720, tuple(q), c)
    pts = grid.points()
    v = _quad_form(q, pts[:, 0], pts[:, 1])
    i = int(np.argmin(v))
    best, s = float(v[i]), (float(pts[i, 0]), float(pts[i, 1]))
    if polish and i > 0:
        r = math.hypot(*s)
        a0 = math.atan2(s[1], s[0])
        da = 2 * math.pi / grid.n_angular
        res = minimize_scalar(lambda a: _quad_form(q, r * math.cos(a), r * math.sin(a)),
                              bounds=(a0 - da, a0 + da), method="bounded",
                              options={"xatol": 1e-12})
        if res.fun < best:
            best, s = float(res.fun), (r * math.cos(res.x), r * math.sin(res.x))
    return best, s


def ring_values(q, c, n: int = 720) -> Tuple[np.ndarray, np.ndarray]:
    """Quadratic form on the boundary ring, angles measured from the x-axis."""
    rho = disk_radius(q, c)
    a = 2 * math.pi * np.arange(n) / n
    return a, _quad_form(q, rho * np.cos(a), rho * np.sin(a))


def ring_extremum_count(q, c, n: int = 720) -> int:
    """Cyclic sign changes of the first differences on the boundary ring."""
    _, v = ring_values(q, c, n)
    d = np.roll(v, -1) - v
    s = np.sign(d)
    s = s[s != 0]
    return int(np.count_nonzero(s != np.roll(s, -1)))


def write_disk_scan(path, q, c, grid: Optional[DiskGrid] = None) -> None:
    grid = grid or DiskGrid(50, 180, tuple(q), _c(c))
    pts = grid.points()
    v = _quad_form(q, pts[:, 0], pts[:, 1])
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s1", "s2", "value"])
        for (a, b), val in zip(pts, v):
            w.writerow([f"{a:.17g}", f"{b:.17g}", f"{val:.17g}"])


# --------------------------------------------------------------------------
# Convexity of sampled curves

@dataclass(frozen=True)
class ConvexityVerdict:
    convex: bool
    winding: int
    first_violation: Optional[int]


def fiber_convexity_check(curve) -> ConvexityVerdict:
    """Strict convexity of the closed polygon through the samples.

    Accepts a FiberCurve or an (n, 2) array."""
    pts = np.asarray(curve.samples if isinstance(curve, FiberCurve) else curve, dtype=float)
    if len(pts) < 64:
        raise DomainError("fiber_convexity_check needs at least 64 samples")
    e = np.roll(pts, -1, axis=0) - pts
    en = np.roll(e, -1, axis=0)
    cross = e[:, 0] * en[:, 1] - e[:, 1] * en[:, 0]
    sign = 1.0 if np.sum(cross) > 0 else -1.0
    bad = np.nonzero(sign * cross <= 0)[0]
    wn = winding_number(pts)
    first = int((bad[0] + 1) % len(pts)) if len(bad) else None
    return ConvexityVerdict(len(bad) == 0 and abs(wn) == 1, wn, first)


def limit_fiber_deviation(c, p_mag: float, angle: float = 0.0, n: int = 256) -> float:
    """max over the fiber at |p| = p_mag of | |q|(|p|^2/2 + c) - 1 |."""
    c = _c(c)
    p = (p_mag * math.cos(angle), p_mag * math.sin(angle))
    curve = fiber_curve(p, c, n=n, r_start=min(1e-6, 1e-3 / (p_mag * p_mag + 1)))
    r = np.hypot(curve.samples[:, 0], curve.samples[:, 1])
    return float(np.max(np.abs(r * (0.5 * p_mag * p_mag + c) - 1)))


# --------------------------------------------------------------------------
# Flow of the regularized Hamiltonian K_c = |q|(H + c)

def _H(q1, q2, p1, p2):
    return 0.5 * (p1 * p1 + p2 * p2) - 1 / math.hypot(q1, q2) - q1 * q1 + 0.5 * q2 * q2 + p1 * q2 - p2 * q1


def K_c(z, c) -> float:
    q1, q2, p1, p2 = z
    return math.hypot(q1, q2) * (_H(q1, q2, p1, p2) + c)


def K_vector_field(z, c) -> Tuple[float, float, float, float]:
    """(dq/dt, dp/dt) = (∂K/∂p, -∂K/∂q)."""
    q1, q2, p1, p2 = z
    r = math.hypot(q1, q2)
    h = _H(q1, q2, p1, p2) + c
    r3 = r ** 3
    Hq1 = -2 * q1 + q1 / r3 - p2
    Hq2 = q2 + q2 / r3 + p1
    Kq1 = q1 / r * h + r * Hq1
    Kq2 = q2 / r * h + r * Hq2
    return (r * (p1 + q2), r * (p2 - q1), -Kq1, -Kq2)


@dataclass(frozen=True)
class FlowState:
    state: PhasePoint
    t: float
    energy_drift: float


@dataclass
class Trajectory:
    states: List[FlowState]
    collided: bool
    max_drift: float

    def write_csv(self, path, c) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "q1", "q2", "p1", "p2", "Kc"])
            for s in self.states:
                z = s.state.as_tuple()
                w.writerow([f"{s.t:.17g}"] + [f"{v:.17g}" for v in z] + [f"{K_c(z, c):.17g}"])


def _midpoint_step(z, c, dt, tol=1e-14, max_iter=50):
    # implicit midpoint: z1 = z + dt·X((z + z1)/2), solved by fixed point
    z1 = z
    for _ in range(max_iter):
        m = tuple(0.5 * (a + b) for a, b in zip(z, z1))
        f = K_vector_field(m, c)
        nz = tuple(a + dt * b for a, b in zip(z, f))
        if max(abs(a - b) for a, b in zip(nz, z1)) < tol:
            return nz
        z1 = nz
    return z1


def flow_integrate(start: PhasePoint, c, dt: float, steps: int,
                   record_every: int = 1, collision_radius: float = 1e-8) -> Trajectory:
    """Fixed-step implicit-midpoint integration of the K_c flow.

    The implicit midpoint rule is symplectic and second order, so energy
    drift stays bounded over long runs instead of growing secularly."""
    c = _c(c)
    if dt <= 0 or steps < 0:
        raise DomainError("need dt > 0 and steps >= 0")
    z = start.as_tuple()
    k0 = K_c(z, c)
    out = [FlowState(start, 0.0, 0.0)]
    drift = 0.0
    collided = False
    for i in range(1, steps + 1):
        z = _midpoint_step(z, c, dt)
        if math.hypot(z[0], z[1]) < collision_radius or not all(map(math.isfinite, z)):
            collided = True
            break
        d = abs(K_c(z, c) - k0)
        drift = max(drift, float(d))
        if i % record_every == 0 or i == steps:
            out.append(FlowState(PhasePoint(*z), i * dt, d))
    return Trajectory(out, collided, drift)


def point_on_level(q, c, direction: float = 0.0) -> PhasePoint:
    """A phase point over q with K_c = 0: p = -Jq + rho·(cos, sin)(direction)."""
    rho = disk_radius(q, c)
    q1, q2 = q
    return PhasePoint(q1, q2, -q2 + rho * math.cos(direction), q1 + rho * math.sin(direction))


# --------------------------------------------------------------------------
# Monte-Carlo battery

def sample_admissible(rng: np.random.Generator, n: int, rmin: float = 0.54):
    """n pairs (q, c): q in the open first quadrant of the region with
    |q| >= rmin, c uniform in (c0, b(q)]."""
    out = []
    while len(out) < n:
        q = (float(rng.uniform(0, X_CRIT)), float(rng.uniform(0, Q2_BOUND)))
        r = math.hypot(*q)
        b = 1.5 * q[0] ** 2 + 1 / r
        if r < rmin or b <= C0 or q[1] == 0:
            continue
        c = float(rng.uniform(C0, b))
        if c <= C0:
            continue
        out.append((q, c))
    return out


@dataclass(frozen=True)
class BatteryRow:
    name: str
    value: float
    threshold: float
    passed: bool
    detail: str = ""


def run_battery(trials: int = 1000, seed: int = 0, fiber_trials: Optional[int] = None,
                flow_steps: int = 20000) -> List[BatteryRow]:
    """Oracle invariants; every row reports its worst observed value."""
    from . import reduction as R
    rng = np.random.default_rng(seed)
    rows: List[BatteryRow] = []
    pairs = sample_admissible(rng, trials)

    worst_gap, worst_ext, min_d2, worst_angle = 0.0, 0, math.inf, 0.0
    bad_ext = 0
    h = math.pi / 400
    a = np.linspace(h, math.pi / 2 - h, 199)
    for q, c in pairs:
        bf, s = brute_force_fiber_min(q, c)
        fm, _ = R.f_q_min(q, c)
        worst_gap = max(worst_gap, abs(bf - fm))
        n_ext = ring_extremum_count(q, c)
        bad_ext += n_ext != 2
        d2 = R.f_q(q, c, a - h) - 2 * R.f_q(q, c, a) + R.f_q(q, c, a + h)
        min_d2 = min(min_d2, float(np.min(d2)))
        if math.hypot(*s) > 0:
            th = math.atan2(q[1], q[0])
            rel = (math.atan2(s[1], s[0]) - th) % (2 * math.pi)
            out_by = max(0.0, rel - math.pi / 2) if rel < math.pi else 2 * math.pi - rel
            worst_angle = max(worst_angle, out_by)
    rows.append(BatteryRow("disk_vs_arc_max_gap", worst_gap, 1e-6, worst_gap < 1e-6))
    rows.append(BatteryRow("ring_extremum_count_not_2", float(bad_ext), 0.0, bad_ext == 0))
    rows.append(BatteryRow("f_q_min_second_difference", min_d2, 0.0, min_d2 > 0))
    rows.append(BatteryRow("argmin_angle_outside_quarter", worst_angle, 1e-6, worst_angle < 1e-6))

    nf = fiber_trials if fiber_trials is not None else max(1, trials // 5)
    bad_fib = 0
    for _ in range(nf):
        c = float(rng.uniform(C0, C0 + 2))
        if c <= C0:
            c = float(np.nextafter(C0, np.inf))
        pm, pa = 5 * math.sqrt(rng.uniform()), rng.uniform(0, 2 * math.pi)
        v = fiber_convexity_check(fiber_curve((pm * math.cos(pa), pm * math.sin(pa)), c))
        bad_fib += not v.convex
    rows.append(BatteryRow("fiber_not_convex", float(bad_fib), 0.0, bad_fib == 0))

    dev = limit_fiber_deviation(2.2, 100.0)
    rows.append(BatteryRow("kepler_limit_deviation_p100", dev, 1e-2, dev < 1e-2))

    worst_warm = math.inf
    for c in np.linspace(C0 + 0.01, C0 + 3, 20):
        curve = fiber_curve((0.0, 0.0), float(c))
        q1, q2 = curve.samples[:, 0], curve.samples[:, 1]
        v1, v2 = tangent_v((q1, q2))
        val = hessian((q1, q2)).quad((v1, v2))
        worst_warm = min(worst_warm, float(np.min(val)))
    rows.append(BatteryRow("warmup_min_vHv", worst_warm, 0.0, worst_warm > 0))

    st = point_on_level((0.45, 0.1), 2.2, 0.7)
    tr = flow_integrate(st, 2.2, 1e-4, flow_steps, record_every=flow_steps)
    rows.append(BatteryRow("flow_energy_drift", tr.max_drift, 1e-6,
                           tr.max_drift < 1e-6 and not tr.collided,
                           f"steps={flow_steps} dt=1e-4"))
    return rows
