"""Hamiltonian of Hill's lunar problem, its regularization and the geometry of
the bounded Hill region.

Conventions: ``H_{c,p}(q) = H(q, p) + c`` where ``H`` is the rotating-frame
Hamiltonian, so the energy level under study is ``-c``.  All functions that
take ``q`` or ``p`` accept either plain pairs of floats or pairs of equally
shaped numpy arrays; scalar input gives scalar output.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Tuple

import numpy as np

from .errors import DomainError, EmptyFiberError, NoRootError

# Constants, built from integer powers of 3.
CBRT3 = 3.0 ** (1.0 / 3.0)
C0 = 3.0 ** (4.0 / 3.0) / 2.0          # critical value is -C0
X_CRIT = 3.0 ** (-1.0 / 3.0)            # |q1| bound of the region
Q2_BOUND = 2.0 * 3.0 ** (-4.0 / 3.0)    # |q2| bound of the region


@dataclass(frozen=True)
class PhasePoint:
    q1: float
    q2: float
    p1: float
    p2: float

    @property
    def q(self) -> Tuple[float, float]:
        return (self.q1, self.q2)

    @property
    def p(self) -> Tuple[float, float]:
        return (self.p1, self.p2)

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.q1, self.q2, self.p1, self.p2)


@dataclass(frozen=True)
class EnergyParam:
    """Energy offset c; the energy level itself is -c."""
    c: float

    def __post_init__(self):
        if not math.isfinite(self.c):
            raise DomainError(f"energy offset must be finite, got {self.c!r}")

    def require_above_critical(self) -> "EnergyParam":
        if not self.c > C0:
            raise DomainError(f"need c > c0 = {C0!r}, got {self.c!r}")
        return self


@dataclass(frozen=True)
class PolarPoint:
    r: float
    theta: float

    def to_cartesian(self) -> Tuple[float, float]:
        return (self.r * math.cos(self.theta), self.r * math.sin(self.theta))

    @classmethod
    def from_cartesian(cls, q1: float, q2: float) -> "PolarPoint":
        return cls(math.hypot(q1, q2), math.atan2(q2, q1))


@dataclass(frozen=True)
class SymMat2:
    """Symmetric 2x2 matrix; entries may be arrays for batched use."""
    a11: float
    a12: float
    a22: float

    def det(self):
        return self.a11 * self.a22 - self.a12 * self.a12

    def quad(self, v):
        """v^T A v."""
        v1, v2 = v
        return self.a11 * v1 * v1 + 2.0 * self.a12 * v1 * v2 + self.a22 * v2 * v2

    def apply(self, v):
        v1, v2 = v
        return (self.a11 * v1 + self.a12 * v2, self.a12 * v1 + self.a22 * v2)

    def as_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a12, self.a22]], dtype=float)


def _c(c) -> float:
    return c.c if isinstance(c, EnergyParam) else c


def _norm(q, op: str):
    q1, q2 = q
    r = np.hypot(q1, q2)
    if np.any(r == 0):
        raise DomainError(f"{op}: undefined at q = 0")
    return q1, q2, r


def _out(x):
    # Collapse 0-d arrays to float so scalar callers get scalars back.
    if isinstance(x, np.ndarray) and x.ndim == 0:
        return float(x)
    return x


def effective_potential(q) -> float:
    """U(q) = -1/|q| - 3/2 q1^2."""
    q1, q2, r = _norm(q, "effective_potential")
    return _out(-1.0 / r - 1.5 * q1 * q1)


def hamiltonian_qp(q, p, c=0.0):
    """H(q, p) + c in the rotating frame (vectorized form)."""
    q1, q2, r = _norm(q, "hamiltonian")
    p1, p2 = p
    h = (0.5 * (p1 * p1 + p2 * p2) - 1.0 / r - q1 * q1 + 0.5 * q2 * q2
         + p1 * q2 - p2 * q1)
    return _out(h + _c(c))


def hamiltonian(s: PhasePoint, c=0.0) -> float:
    return hamiltonian_qp(s.q, s.p, c)


def hamiltonian_completed_square(s: PhasePoint, c=0.0) -> float:
    """Same value as :func:`hamiltonian`, written as kinetic term plus U."""
    k = 0.5 * ((s.p1 + s.q2) ** 2 + (s.p2 - s.q1) ** 2)
    return k + effective_potential(s.q) + _c(c)


def regularized_hamiltonian(s: PhasePoint, c=0.0) -> float:
    """K_c = |q| (H + c); only the product formula is used."""
    return math.hypot(s.q1, s.q2) * hamiltonian(s, c)


def critical_data() -> Tuple[PhasePoint, PhasePoint, float]:
    """The two critical points of H and the common critical value -c0."""
    a = X_CRIT
    return PhasePoint(a, 0.0, 0.0, a), PhasePoint(-a, 0.0, 0.0, -a), -C0


def grad_H(s: PhasePoint) -> Tuple[float, float, float, float]:
    """Full phase-space gradient (dH/dq1, dH/dq2, dH/dp1, dH/dp2)."""
    g1, g2 = grad_Hcp(s.q, s.p)
    return (g1, g2, s.p1 + s.q2, s.p2 - s.q1)


def grad_Hcp(q, p):
    """Gradient in q of H_{c,p}; it does not depend on c."""
    q1, q2, r = _norm(q, "grad_Hcp")
    p1, p2 = p
    r3 = r ** 3
    return (_out(-2.0 * q1 + q1 / r3 - p2), _out(q2 + q2 / r3 + p1))


def hessian(q) -> SymMat2:
    """Hessian in q of H_{c,p}; independent of p and c."""
    q1, q2, r = _norm(q, "hessian")
    r5 = r ** 5
    a11 = (q2 * q2 - 2.0 * q1 * q1) / r5 - 2.0
    a12 = -3.0 * q1 * q2 / r5
    a22 = (q1 * q1 - 2.0 * q2 * q2) / r5 + 1.0
    return SymMat2(_out(a11), _out(a12), _out(a22))


def tangent_v(q):
    """v = J grad H_{c,0}, tangent to the level curves of H_{c,0}."""
    q1, q2, r = _norm(q, "tangent_v")
    r3 = r ** 3
    return (_out(q2 + q2 / r3), _out(2.0 * q1 - q1 / r3))


def shifted_w(q):
    """w = v - Jq with J the quarter turn (x, y) -> (y, -x)."""
    q1, q2, r = _norm(q, "shifted_w")
    r3 = r ** 3
    return (_out(q2 / r3), _out(3.0 * q1 - q1 / r3))


def tangential_hessian(q, s=(0.0, 0.0)):
    """(w + s)^T Hess (w + s): second derivative of H_{c,p} along the
    tangent of the fiber curve, with s = p + Jq."""
    w1, w2 = shifted_w(q)
    return _out(hessian(q).quad((w1 + s[0], w2 + s[1])))


def cubic_coeffs(b: float, theta: float) -> Tuple[float, float]:
    """Leading and linear coefficients of f_{b,θ}(r) = a r^3 - b r + 1."""
    return 1.5 * math.cos(theta) ** 2, b


def cubic_smallest_positive_root_array(b, theta, tol: float = 1e-15):
    """Vectorized bisection for the smallest positive root of
    3/2 cos^2θ r^3 - b r + 1 (b >= c0)."""
    b = np.asarray(b, dtype=float)
    theta = np.asarray(theta, dtype=float)
    b, theta = np.broadcast_arrays(b, theta)
    if np.any(b < C0 * (1.0 - 1e-15)):
        raise NoRootError("cubic level curve needs b >= c0")
    a = 1.5 * np.cos(theta) ** 2
    flat = a < 1e-300
    a_safe = np.where(flat, 1.0, a)
    # f is decreasing on (0, hi) where hi is the positive critical point.
    hi = np.sqrt(b / (3.0 * a_safe))
    lo = np.zeros_like(hi)
    fhi = a_safe * hi ** 3 - b * hi + 1.0
    # Double root at b = c0, θ = 0 up to rounding: accept the critical point.
    double = fhi > 0
    if np.any(double & ~flat & (fhi > 1e-12)):
        raise NoRootError("no sign change on the bracket")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = a_safe * mid ** 3 - b * mid + 1.0
        pos = fm > 0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
        if np.all(hi - lo <= tol * np.maximum(1.0, hi)):
            break
    root = 0.5 * (lo + hi)
    root = np.where(double, np.sqrt(b / (3.0 * a_safe)), root)
    root = np.where(flat, 1.0 / b, root)
    return _out(root)


def cubic_smallest_positive_root(b: float, theta: float) -> float:
    """r_{b,θ}: where the boundary curve of {3/2 q1^2 + 1/|q| > b} meets
    the ray at angle θ."""
    if abs(math.cos(theta)) < 1e-150:
        return 1.0 / b
    return float(cubic_smallest_positive_root_array(b, theta))


def hill_boundary_max_q2(b: float = C0, n: int = 20001) -> float:
    """Largest q2 on the cubic level curve {3/2 q1^2 + 1/|q| = b}."""
    th = np.linspace(0.0, math.pi / 2, n)
    r = cubic_smallest_positive_root_array(np.full_like(th, b), th)
    k = int(np.argmax(r * np.sin(th)))
    lo, hi = th[max(k - 1, 0)], th[min(k + 1, n - 1)]
    # Refine with a golden-section search around the grid maximum.
    from scipy.optimize import minimize_scalar
    res = minimize_scalar(lambda t: -cubic_smallest_positive_root(b, t) * math.sin(t),
                          bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-13})
    return max(float(-res.fun), float(np.max(r * np.sin(th))))


def in_hill_region(q) -> bool:
    q1, q2, r = _norm(q, "in_hill_region")
    ok = (1.0 / r + 1.5 * q1 * q1 > C0) & (np.abs(q1) < X_CRIT) & (np.abs(q2) < Q2_BOUND)
    if isinstance(ok, np.ndarray) and ok.ndim == 0:
        return bool(ok)
    return ok


def disk_radius(q, c, tol: float = 1e-12) -> float:
    """|s| on the fiber: sqrt(3 q1^2 + 2/|q| - 2c).

    Radicands in [-tol, 0) are treated as 0 so that boundary points computed
    in floating point are accepted."""
    q1, q2, r = _norm(q, "disk_radius")
    rad = 3.0 * q1 * q1 + 2.0 / r - 2.0 * _c(c)
    if np.any(rad < -tol):
        raise DomainError("disk_radius: q lies outside the region for this c")
    return _out(np.sqrt(np.maximum(rad, 0.0)))


def symmetry_images(s: PhasePoint) -> Tuple[PhasePoint, PhasePoint]:
    """The two anti-symplectic involutions R1, R2."""
    r1 = PhasePoint(-s.q1, s.q2, s.p1, -s.p2)
    r2 = PhasePoint(s.q1, -s.q2, -s.p1, s.p2)
    return r1, r2


# --------------------------------------------------------------------------
# Fiber curves

def _fiber_gap(q1, q2, p, c):
    # f - g with f = q1^2 - q2^2/2 + 1/|q| and g = p1 q2 - p2 q1 + |p|^2/2 + c.
    # Positive inside the fiber, so H_{c,p} = -(f - g).
    p1, p2 = p
    f = q1 * q1 - 0.5 * q2 * q2 + 1.0 / np.hypot(q1, q2)
    g = p1 * q2 - p2 * q1 + 0.5 * (p1 * p1 + p2 * p2) + c
    return f - g


@dataclass
class FiberCurve:
    p: Tuple[float, float]
    c: float
    theta: np.ndarray
    samples: np.ndarray                 # shape (n, 2)
    residual: np.ndarray = field(repr=False, default=None)

    def __len__(self) -> int:
        return len(self.theta)

    def winding_number(self) -> int:
        return winding_number(self.samples)

    def is_simple(self) -> bool:
        return is_simple_polygon(self.samples)

    def write_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["theta", "q1", "q2", "residual"])
            for t, (a, b), res in zip(self.theta, self.samples, self.residual):
                w.writerow([f"{t:.17g}", f"{a:.17g}", f"{b:.17g}", f"{res:.6e}"])


def fiber_curve(p, c, n: int = 256, r_start: float = 1e-6,
                n_march: int = 4000) -> FiberCurve:
    """Sample the closed component of {q : H_{c,p}(q) = 0} around the origin.

    Each of n equally spaced rays is marched geometrically from r_start; the
    first sign change of f - g is refined by bisection."""
    c = _c(c)
    if not c > C0:
        raise DomainError(f"fiber_curve needs c > c0, got {c!r}")
    if n < 16:
        raise DomainError("fiber_curve needs n >= 16")
    p = (float(p[0]), float(p[1]))
    theta = 2.0 * math.pi * np.arange(n) / n
    ct, st = np.cos(theta), np.sin(theta)
    with np.errstate(divide="ignore"):
        r_edge = np.where(np.abs(ct) > 1e-12, X_CRIT / np.abs(ct), np.inf)
    r_edge = np.minimum(r_edge, 2.0)
    t = np.geomspace(1.0, r_edge / r_start, n_march)      # (n_march, n)
    rr = r_start * t
    gap = _fiber_gap(rr * ct, rr * st, p, c)
    if np.any(gap[0] <= 0):
        raise EmptyFiberError("f does not dominate at the ray start")
    neg = gap <= 0
    has = neg.any(axis=0)
    if not has.all():
        raise EmptyFiberError(f"no sign change on {int((~has).sum())} of {n} rays "
                              f"for p={p}, c={c}")
    j = np.argmax(neg, axis=0)
    cols = np.arange(n)
    lo = rr[j - 1, cols]
    hi = rr[j, cols]
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        inside = _fiber_gap(mid * ct, mid * st, p, c) > 0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    r = 0.5 * (lo + hi)
    q1, q2 = r * ct, r * st
    res = -_fiber_gap(q1, q2, p, c)
    return FiberCurve(p, c, theta, np.column_stack([q1, q2]), np.abs(res))


def winding_number(pts: np.ndarray, about: Sequence[float] = (0.0, 0.0)) -> int:
    """Winding number of the closed polygon through pts around a point."""
    pts = np.asarray(pts, dtype=float)
    ang = np.arctan2(pts[:, 1] - about[1], pts[:, 0] - about[0])
    d = np.diff(np.append(ang, ang[0]))
    d = (d + np.pi) % (2.0 * np.pi) - np.pi
    return int(round(d.sum() / (2.0 * np.pi)))


def is_simple_polygon(pts: np.ndarray) -> bool:
    """True if no two non-adjacent edges of the closed polygon intersect."""
    a = np.asarray(pts, dtype=float)
    b = np.roll(a, -1, axis=0)
    n = len(a)

    def orient(p, q, r):
        return np.sign((q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1])
                       - (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0]))

    A, B = a[:, None, :], b[:, None, :]
    C, D = a[None, :, :], b[None, :, :]
    cross = ((orient(A, B, C) * orient(A, B, D) < 0)
             & (orient(C, D, A) * orient(C, D, B) < 0))
    i, j = np.indices((n, n))
    adjacent = (np.abs(i - j) <= 1) | (np.abs(i - j) == n - 1)
    return not bool(np.any(cross & ~adjacent))


def sample_hill_region(n: int = 200, inside_only: bool = True):
    """Rectangular grid over the bounding box of the region; returns the
    points (q1, q2) that are in the region."""
    g1 = np.linspace(-X_CRIT, X_CRIT, n + 2)[1:-1]
    g2 = np.linspace(-Q2_BOUND, Q2_BOUND, n + 2)[1:-1]
    Q1, Q2 = np.meshgrid(g1, g2, indexing="ij")
    keep = np.hypot(Q1, Q2) > 0
    Q1, Q2 = Q1[keep], Q2[keep]
    if inside_only:
        m = in_hill_region((Q1, Q2))
        Q1, Q2 = Q1[m], Q2[m]
    return Q1, Q2


def random_phase_points(rng: np.random.Generator, n: int,
                        rmin: float = 0.05, rmax: float = 1.0,
                        pmax: float = 2.0) -> Iterable[PhasePoint]:
    r = rng.uniform(rmin, rmax, n)
    th = rng.uniform(0, 2 * math.pi, n)
    p = rng.uniform(-pmax, pmax, (n, 2))
    for k in range(n):
        yield PhasePoint(r[k] * math.cos(th[k]), r[k] * math.sin(th[k]), p[k, 0], p[k, 1])
