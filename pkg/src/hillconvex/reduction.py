"""Derived functions of the convexity argument.

Everything here is a closed-form expression in the position q (or in the
blow-up coordinates (x, k) near the critical point) that bounds or equals the
tangential Hessian

    F_q(s) = (w(q) + s)^T Hess(q) (w(q) + s),   |s| <= rho(q, c),

where rho is :func:`hill_core.disk_radius`.  The boundary restriction
``f_q(α)`` takes ``s = rho·(cos(θ+α), sin(θ+α))`` with θ the polar angle of q.

Notation used throughout: ``b(q) = 3/2 q1^2 + 1/|q|`` is the pointwise level
of q (so rho^2 = 2b - 2c), ``x = |q|`` and ``y = cos^2 θ``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, HillError
from .hill_core import C0, X_CRIT, _c, _out, disk_radius, hessian, shifted_w, tangent_v

C3 = 3.0 ** (1.0 / 3.0)
C23 = 3.0 ** (2.0 / 3.0)
K43 = 3.0 ** (4.0 / 3.0)
SQRT2 = math.sqrt(2.0)

INNER_RADIUS = 0.54      # Step 1 / Step 2 split
OUTER_RADIUS = 0.63      # Step 2 / Step 3 split


class IndeterminateError(HillError):
    """A sampled sign pattern had a value too close to zero to classify."""


# --------------------------------------------------------------------------
# Tangential Hessian and the boundary restriction f_q

def tangential_hessian(q, p):
    """(v + p)^T Hess (v + p): the fiber-curve tangential Hessian at (q, p)."""
    v1, v2 = tangent_v(q)
    return _out(hessian(q).quad((v1 + p[0], v2 + p[1])))


def vHv_closed_form(q):
    """v^T Hess v for p = 0, expanded as a polynomial in q1, q2 and 1/|q|."""
    q1, q2 = q
    r = np.hypot(q1, q2)
    return _out(1 / r**7 - 3 * q1**2 / r**6 - 27 * q1**2 * q2**2 / r**5
                - 3 * q2**2 / r**3 + 4 * q1**2 - 2 * q2**2)


def pointwise_level(q):
    """b(q) = 3/2 q1^2 + 1/|q|; the disk at q is empty for c > b(q)."""
    q1, q2 = q
    return _out(1.5 * q1 * q1 + 1.0 / np.hypot(q1, q2))


def w_H_w_polar(r, theta):
    """w^T Hess w in polar coordinates."""
    if np.any(np.asarray(r) <= 0):
        raise DomainError("w_H_w_polar needs r > 0")
    cs2 = np.cos(theta) ** 2
    sn2 = np.sin(theta) ** 2
    return _out(1 / r**7 - 5 * cs2 / r**4 - 2 * sn2 / r**4 + 3 * cs2 / r
                - 27 * cs2 * sn2 / r + 9 * r**2 * cs2)


def _fq_parts(q, c):
    q1, q2 = q
    r = math.hypot(q1, q2)
    if r == 0:
        raise DomainError("f_q: undefined at q = 0")
    th = math.atan2(q2, q1)
    cs = math.cos(th) * math.sin(th)
    b = 1.5 * q1 * q1 + 1.0 / r
    rho = disk_radius(q, c)
    return r, th, cs, b, rho


def f_q(q, c, alpha):
    """Tangential Hessian on the disk boundary, angle α measured from θ.

    Uses the expansion w^T H w + 2 rho w^T H u + rho^2 u^T H u with u the unit
    vector at angle θ + α, written out in r, θ, b."""
    r, th, cs, b, rho = _fq_parts(q, c)
    ca, sa = np.cos(alpha), np.sin(alpha)
    wHw = w_H_w_polar(r, th)
    wHu = ca * (3 * r - 9 / r**2) * cs + sa * (-1 / r**5 + 2 * b / r)
    uHu = (ca**2 * (1 - 2 * b / r**2) + sa**2 * (-1 / r**3 + 2 * b / r**2 - 2)
           + 2 * ca * sa * 3 * cs)
    return _out(wHw + 2 * rho * wHu + rho**2 * uHu)


def f_q_direct(q, c, alpha):
    """Same value as :func:`f_q` from the raw 2x2 quadratic form."""
    q1, q2 = q
    th = math.atan2(q2, q1)
    rho = disk_radius(q, c)
    w1, w2 = shifted_w(q)
    s1 = rho * np.cos(th + np.asarray(alpha))
    s2 = rho * np.sin(th + np.asarray(alpha))
    return _out(hessian(q).quad((w1 + s1, w2 + s2)))


@dataclass(frozen=True)
class TrigDerivCoeffs:
    """df_q/dα = A1 sin 2α + A2 cos 2α + B1 sin α + B2 cos α."""
    A1: float
    A2: float
    B1: float
    B2: float

    def __call__(self, alpha):
        return (self.A1 * np.sin(2 * alpha) + self.A2 * np.cos(2 * alpha)
                + self.B1 * np.sin(alpha) + self.B2 * np.cos(alpha))

    def second(self, alpha):
        """d^2 f_q / dα^2."""
        return (2 * self.A1 * np.cos(2 * alpha) - 2 * self.A2 * np.sin(2 * alpha)
                + self.B1 * np.cos(alpha) - self.B2 * np.sin(alpha))

    def amplitude_ratio(self) -> float:
        """2 sqrt(A1^2 + A2^2) / sqrt(B1^2 + B2^2); below 1 means two roots."""
        return 2 * math.hypot(self.A1, self.A2) / math.hypot(self.B1, self.B2)


def f_q_deriv_coeffs(q, c) -> TrigDerivCoeffs:
    r, th, cs, b, rho = _fq_parts(q, c)
    A1 = rho**2 * (-1 / r**3 + 4 * b / r**2 - 3)
    A2 = rho**2 * 6 * cs
    B1 = 2 * rho * (9 / r**2 - 3 * r) * cs
    B2 = 2 * rho * (-1 / r**5 + 2 * b / r)
    return TrigDerivCoeffs(A1, A2, B1, B2)


def count_circle_roots(coeffs: TrigDerivCoeffs, n: int = 10_000, tol: float = 1e-12) -> int:
    """Number of sign changes of the trigonometric polynomial on a cyclic grid.

    The grid is offset by half a step so that the symmetric zeros of pure
    sines and cosines never land on a node."""
    a = 2 * math.pi * (np.arange(n) + 0.5) / n
    v = coeffs(a)
    if np.any(np.abs(v) < tol):
        raise IndeterminateError("grid value within tolerance of zero; refine the grid")
    s = np.sign(v)
    return int(np.count_nonzero(s != np.roll(s, -1)))


def f_q_min(q, c, xatol: float = 1e-12) -> Tuple[float, float]:
    """min over α in [0, π/2] of f_q (convex there), with the minimizing α."""
    res = minimize_scalar(lambda a: f_q(q, c, a), bounds=(0.0, math.pi / 2),
                          method="bounded", options={"xatol": xatol})
    cands = [(float(res.fun), float(res.x)), (f_q(q, c, 0.0), 0.0),
             (f_q(q, c, math.pi / 2), math.pi / 2)]
    return min(cands)


# --------------------------------------------------------------------------
# Step 1 estimates (|q| <= 0.54)

def lambda_minus(q):
    """Negative eigenvalue of Hess(q) from the characteristic polynomial."""
    h = hessian(q)
    tr = h.a11 + h.a22
    return _out(0.5 * (tr - np.sqrt((h.a11 - h.a22) ** 2 + 4 * h.a12**2)))


def lambda_minus_bound(q):
    q1, q2 = q
    r = np.hypot(q1, q2)
    if np.any(r == 0):
        raise DomainError("lambda_minus_bound: undefined at q = 0")
    return _out(-(2 + 2 / r**3))


def radial_lower_bound(r):
    """Lower bound for the tangential Hessian on the circle |q| = r at the
    critical energy, r <= 0.54."""
    r = np.asarray(r, dtype=float)
    rad = 3 * r**2 + 2 / r - K43
    if np.any(rad < 0):
        raise DomainError("radial_lower_bound: negative radicand")
    val = (11 / 12 / r**7 - 10 / 3 / r**4 - 29 / 6 / r + 4 * r**2 - 0.75 * r**5
           - 2 * (1 / r**5 - 2 / r**2) * np.sqrt(rad) - (2 + 2 / r**3) * rad)
    return _out(val)


def warmup_lower_bound(r):
    """Lower bound for v^T Hess v at p = 0 used for small |q|."""
    return _out(1 / r**7 - 3 / r**4 - 27 / 4 / r - 2 * r**2)


# --------------------------------------------------------------------------
# Blow-up coordinates (x, k) near the critical point

@dataclass(frozen=True)
class BlowupPoint:
    x: float
    k: float


def y_of(x, k):
    """cos^2 θ as a function of (x, k)."""
    return (1 + 3 * k * (C3 * x - 1)) / (1 + k * (3 * x**3 - 1))


def y_lower(x):
    """cos^2 θ on the region boundary at radius x (k = 1)."""
    return (K43 - 2 / x) / (3 * x**2)


def dy_dk(x, k):
    return (-3 * x**3 + K43 * x - 2) / (1 + k * (3 * x**3 - 1)) ** 2


def blowup_forward(b: BlowupPoint) -> Tuple[float, float]:
    return (b.x, _out(y_of(b.x, b.k)))


def blowup_inverse(x, y) -> BlowupPoint:
    den = 3 * x**3 * y - K43 * x + 3 - y
    if np.any(np.asarray(den) <= 0):
        raise DomainError("blowup_inverse: point outside the image of the blow-up")
    return BlowupPoint(x, _out((1 - y) / den))


def q_of(x, k):
    """First-quadrant position with |q| = x and cos^2 θ = y(x, k)."""
    y = np.clip(y_of(x, k), 0.0, 1.0)
    return (x * np.sqrt(y), x * np.sqrt(1 - y))


def energy_gap(x, k):
    """2b - 2c0 at the point (x, k) (the squared disk radius at energy c0)."""
    return _out((1 - k) / (1 + k * (3 * x**3 - 1)) * (X_CRIT - x) ** 2 * (3 + 2 * C23 / x))


# --------------------------------------------------------------------------
# Rational building blocks

def r0(x):
    return 15 * C23 / x**7 - 27 / x**6 - 18 * C3 / x**5 + 5 * C23 / x**4 + 12 / x**3 + 9 * C3 / x**2


def r1(x):
    return -13 / x**6 + 18 * C3 / x**5 - 8 / x**3 + 3


def r2(x):
    return C3 / x**5 + C23 / x**4 + 3 / x**3 + K43 / x**2


def r3(x):
    return 1 - K43 / x**2


def r5(x):
    return -1 / x**3 + K43 / x**2 - 2


def wHw_at_critical_level(x):
    """w^T H w on the boundary curve of level c0, as a function of x."""
    return (15 / x**7 - 39 * C3 / x**6 + 27 * C23 / x**5 + 14 / x**4
            - 24 * C3 / x**3 - 6 / x + 9 * C3)


def a3sq(x):
    return 3 + 2 * C23 / x


def f9(x):
    """Leading coefficient of the quadratic g_x."""
    return -13 / x**6 + 18 * C3 / x**5 - 19 / (2 * x**3) + 6 * C3 / x**2 - 0.5


def g_x_coeffs(x):
    """(a, b, c) with g_x(t) = a t^2 + b t + c."""
    return f9(x), -2 * SQRT2 * r2(x), r0(x)


def g_x_eval(x, t):
    a, b, c = g_x_coeffs(x)
    return _out(a * t * t + b * t + c)


def g_x_discriminant(x):
    """D_x = b^2 - 4ac of g_x."""
    a, b, c = g_x_coeffs(x)
    return _out(b * b - 4 * a * c)


def g_x_discriminant_quarter(x):
    """D_x / 4 written as 2 r2^2 - f9 r0."""
    return _out(2 * r2(x) ** 2 - f9(x) * r0(x))


def g_x_slope_at_edge(x):
    """dg_x/dt at t = sqrt(3 + 2·3^{2/3}/x)."""
    return _out(2 * f9(x) * np.sqrt(a3sq(x)) - 2 * SQRT2 * r2(x))


def g_x_at_edge(x):
    return g_x_eval(x, np.sqrt(a3sq(x)))


# --------------------------------------------------------------------------
# Tangent-line values l_q(π/4 ± 1) at the critical energy

def _wHw_xy(x, y):
    cs2, sn2 = y, 1 - y
    return (1 / x**7 - 5 * cs2 / x**4 - 2 * sn2 / x**4 + 3 * cs2 / x
            - 27 * cs2 * sn2 / x + 9 * x**2 * cs2)


def _level_terms(x, k):
    y = y_of(x, k)
    gap = energy_gap(x, k)
    rho = np.sqrt(gap)
    b = 0.5 * (3 * x**2 * y + 2 / x)
    cs = np.sqrt(np.clip(y * (1 - y), 0.0, None))
    return y, gap, rho, b, cs


def l_plus(x, k):
    """Tangent line of f_q at π/4, evaluated at π/4 + 1 (energy c0)."""
    y, gap, rho, b, cs = _level_terms(x, k)
    return _out(_wHw_xy(x, y) + 2 * rho * SQRT2 * (-1 / x**5 + 2 * b / x)
                + gap * (-3.5 - 1.5 / x**3 + 4 * b / x**2 + 3 * cs))


def l_minus(x, k):
    """Tangent line of f_q at π/4, evaluated at π/4 - 1 (energy c0)."""
    y, gap, rho, b, cs = _level_terms(x, k)
    return _out(_wHw_xy(x, y) + 2 * rho * SQRT2 * (3 * x - 9 / x**2) * cs
                + gap * (2.5 + 0.5 / x**3 - 4 * b / x**2 + 3 * cs))


# --------------------------------------------------------------------------
# Case bounds on [0.54, 0.63]

CASE_INTERVALS = {1: (0.0, 1 / 3), 2: (1 / 3, 2 / 3), 3: (2 / 3, 3 / 4),
                  4: (3 / 4, 4 / 5), 5: (4 / 5, 1.0)}


def _case_tables(i: int, x):
    """(U_i, m_i, M_i) without the common factor 3 + 2·3^{2/3}/x."""
    if i == 1:
        return np.sqrt(2 * x) / (3 * x**3 + 2), 2 / (3 * x**3 + 2), 1 + 0 * x
    if i == 2:
        return 1 / (2 * math.sqrt(3) * x), 1 / (6 * x**3 + 1), 2 / (3 * x**3 + 2)
    if i == 3:
        return np.sqrt(2 * x) / (6 * x**3 + 1), 1 / (9 * x**3 + 1), 1 / (6 * x**3 + 1)
    if i == 4:
        return np.sqrt(3 * x) / (9 * x**3 + 1), 1 / (12 * x**3 + 1), 1 / (9 * x**3 + 1)
    if i == 5:
        return 2 * np.sqrt(x) / (12 * x**3 + 1), 0 * x, 1 / (12 * x**3 + 1)
    raise DomainError(f"invalid case id {i!r}; expected 1..5")


def h_case(x):
    """Coefficient of the (1-k)/D term in the Step 2 lower bound."""
    return -13 / x**6 + 6 * K43 / x**5 - 15 / (2 * x**3) - 2 * K43 / x**2 + 5.5


@dataclass(frozen=True)
class CaseBounds:
    case_id: int

    @property
    def k_interval(self) -> Tuple[float, float]:
        return CASE_INTERVALS[self.case_id]

    def U(self, x):
        return _case_tables(self.case_id, x)[0] * a3sq(x)

    def m(self, x):
        return _case_tables(self.case_id, x)[1] * a3sq(x)

    def M(self, x):
        return _case_tables(self.case_id, x)[2] * a3sq(x)

    def L(self, x, which: str):
        t = self.m(x) if which == "m" else self.M(x)
        return r0(x) + 2 * SQRT2 * self.U(x) * (3 * x - 9 / x**2) + t * h_case(x)


def sqrt_term_sup(i: int, x):
    """Exact max over case i's k-interval of :func:`step2_sqrt_term`.

    The term is unimodal in k with peak at k* = 1/(1 + 3x^3).  For case 3 and
    x < 6^{-1/3} the peak lies inside [2/3, 3/4], so the tabulated U_3 (the
    value at k = 2/3) is slightly too small there."""
    lo, hi = CASE_INTERVALS[i] if i in CASE_INTERVALS else _case_tables(i, x)
    ks = 1 / (1 + 3 * np.asarray(x, dtype=float) ** 3)
    kk = np.clip(ks, lo, hi)
    return step2_sqrt_term(x, kk)


def case_bounds_sup(i: int, x) -> Tuple[float, float]:
    """(L_i^m, L_i^M) with U_i replaced by :func:`sqrt_term_sup`."""
    cb = CaseBounds(i)
    U = sqrt_term_sup(i, x)
    base = r0(x) + 2 * SQRT2 * U * (3 * x - 9 / x**2)
    return _out(base + cb.m(x) * h_case(x)), _out(base + cb.M(x) * h_case(x))


def case_bounds(i: int, x) -> Tuple[float, float]:
    """(L_i^m(x), L_i^M(x))."""
    cb = CaseBounds(i)
    _case_tables(i, 0.6)            # validates i
    return _out(cb.L(x, "m")), _out(cb.L(x, "M"))


def step2_sqrt_term(x, k):
    """sqrt(x)·sqrt(k - k^2)/D · (3 + 2·3^{2/3}/x)."""
    D = 1 + k * (3 * x**3 - 1)
    return np.sqrt(x) * np.sqrt(k - k * k) / D * a3sq(x)


def step2_lin_term(x, k):
    """(1 - k)/D · (3 + 2·3^{2/3}/x)."""
    D = 1 + k * (3 * x**3 - 1)
    return (1 - k) / D * a3sq(x)


def step2_bracket(x, k):
    """Left side of the factored Step 2 inequality that the case bounds
    bound from below."""
    return _out(r0(x) + 2 * SQRT2 * step2_sqrt_term(x, k) * (3 * x - 9 / x**2)
                + step2_lin_term(x, k) * h_case(x))


# --------------------------------------------------------------------------
# Step 3: C-functions, d, corner identity, monotonicity

def C_funcs(x, k):
    """(C1, C2, C3, C4, C5) with d = C1 - C2 cos α - C3 sin α + C4 cos^2 α + C5 sin^2 α."""
    D = 1 + k * (3 * x**3 - 1)
    A = a3sq(x)
    T = (1 - k) / D * A
    C1 = r0(x) + T * r1(x)
    C2 = 2 * np.sqrt(x) * np.sqrt(k - k * k) / D * A * (9 / x**2 - 3 * x)
    C3_ = 2 * np.sqrt(T) * r2(x)
    C4 = T * r3(x)
    C5 = T * r5(x)
    return tuple(_out(v) for v in (C1, C2, C3_, C4, C5))


def d_func(x, k, alpha):
    C1, C2, C3_, C4, C5 = C_funcs(x, k)
    ca, sa = np.cos(alpha), np.sin(alpha)
    return _out(C1 - C2 * ca - C3_ * sa + C4 * ca**2 + C5 * sa**2)


def d_corner_sos(k, alpha):
    """Sum-of-squares form of d at x = 3^{-1/3}."""
    return _out(36 * ((3 * np.sqrt(1 - k) * np.sin(alpha) - 1) ** 2
                      + (np.sqrt(2 * k) - np.sqrt(6 * (1 - k)) * np.cos(alpha)) ** 2))


def d_corner(k, alpha, tol: float = 1e-10):
    """d(3^{-1/3}, k, α), cross-checked against the sum-of-squares form."""
    raw = d_func(X_CRIT, k, alpha)
    sos = d_corner_sos(k, alpha)
    if np.max(np.abs(np.asarray(raw) - np.asarray(sos))) > tol:
        raise HillError("corner identity mismatch")
    return raw


def chain_E_D_G(x, k, alpha):
    """(G, E, D) at blow-up coordinates (x, k) and angle α, energy c0.

    G is f_q itself, E drops the cos θ sin θ refinements, D further drops
    the cubic and quartic terms in sqrt(2c - 2c0)."""
    y, gap, rho, b, cs = _level_terms(x, k)
    sn = np.sqrt(np.clip(1 - y, 0.0, None))
    ca, sa = np.cos(alpha), np.sin(alpha)
    wHw = _wHw_xy(x, y)
    G = (wHw + 2 * rho * (ca * (3 * x - 9 / x**2) * cs + sa * (-1 / x**5 + 2 * b / x))
         + gap * (ca**2 * (1 - 2 * b / x**2) + sa**2 * (-1 / x**3 + 2 * b / x**2 - 2)
                  + 2 * ca * sa * 3 * cs))
    E = (wHw + 2 * rho * (ca * (3 * x - 9 / x**2) * sn + sa * (-1 / x**5 + 2 * b / x))
         + gap * (ca**2 * (1 - 2 * b / x**2) + sa**2 * (-1 / x**3 + 2 * b / x**2 - 2)))
    D = (wHw_at_critical_level(x)
         + 2 * rho * (ca * (3 * x - 9 / x**2) * sn + sa * (-1 / x**5 + K43 / x))
         + gap * (r1(x) + ca**2 * r3(x) + sa**2 * r5(x)))
    return _out(G), _out(E), _out(D)


# -- closed-form x-derivatives --------------------------------------------

def _dr0(x):
    return (-105 * C23 / x**8 + 162 / x**7 + 90 * C3 / x**6 - 20 * C23 / x**5
            - 36 / x**4 - 18 * C3 / x**3)


def _dr1(x):
    return 78 / x**7 - 90 * C3 / x**6 + 24 / x**4


def _dr2(x):
    return -5 * C3 / x**6 - 4 * C23 / x**5 - 9 / x**4 - 2 * K43 / x**3


def _dr3(x):
    return 2 * K43 / x**3


def _dr5(x):
    return 3 / x**4 - 2 * K43 / x**3


def _dA(x):
    return -2 * C23 / x**2


def _a4(x):
    return 9 * x**-1.5 - 3 * x**1.5


def _da4(x):
    return -13.5 * x**-2.5 - 4.5 * x**0.5


def dC_dx(x, k):
    """Closed-form (∂C1/∂x, ..., ∂C5/∂x)."""
    D = 1 + k * (3 * x**3 - 1)
    inv = 1 / D
    t = 9 * x**2 * k * inv                  # (∂D/∂x)/D
    A, dA = a3sq(x), _dA(x)
    om = (1 - k) * inv                      # (1-k)/D
    T = om * A
    dT = om * (dA - t * A)
    dC1 = _dr0(x) + dT * r1(x) + T * _dr1(x)
    dC4 = dT * r3(x) + T * _dr3(x)
    dC5 = dT * r5(x) + T * _dr5(x)
    Aa4 = A * _a4(x)
    dAa4 = dA * _a4(x) + A * _da4(x)
    dC2 = 2 * np.sqrt(k - k * k) * inv * (dAa4 - t * Aa4)
    a3 = np.sqrt(A)
    S2 = a3 * r2(x)
    S3 = dA / (2 * a3) * r2(x) + a3 * _dr2(x)
    dC3 = 2 * np.sqrt(1 - k) * np.sqrt(inv) * (S3 - 0.5 * t * S2)
    return tuple(_out(v) for v in (dC1, dC2, dC3, dC4, dC5))


def k_of_u(u):
    return 3 * u**2 - 2 * u**3


def F_xk(x, k):
    """∂C1/∂x - ∂C2/∂x - ∂C3/∂x + ∂C4/∂x."""
    d1, d2, d3, d4, _ = dC_dx(x, k)
    return _out(d1 - d2 - d3 + d4)


def F_xu(x, u):
    return F_xk(x, k_of_u(u))


def F_sharp_xk(x, k):
    """∂C1/∂x + ∂C4/∂x + sqrt((∂C2/∂x)^2 + (∂C3/∂x)^2).

    Upper bound for ∂d/∂x over α in [0, π/2] that keeps the cos α / sin α
    coupling: -P cos α - Q sin α <= sqrt(P^2 + Q^2)."""
    d1, d2, d3, d4, _ = dC_dx(x, k)
    return _out(d1 + d4 + np.hypot(d2, d3))


def F_sharp_xu(x, u):
    return F_sharp_xk(x, k_of_u(u))


def dd_dx(x, k, alpha):
    """Exact ∂d/∂x from the closed-form C-derivatives."""
    d1, d2, d3, d4, d5 = dC_dx(x, k)
    ca, sa = np.cos(alpha), np.sin(alpha)
    return _out(d1 - d2 * ca - d3 * sa + d4 * ca**2 + d5 * sa**2)


def dC45_over_1mk(x, k):
    """∂/∂x of (C4 - C5)/(1 - k)."""
    D = 1 + k * (3 * x**3 - 1)
    P = 3 - 2 * K43 / x**2 + 1 / x**3
    dP = 4 * K43 / x**3 - 3 / x**4
    A = a3sq(x)
    return _out(-9 * k * x**2 / D**2 * A * P + _dA(x) / D * P + A / D * dP)


# --------------------------------------------------------------------------
# Vectorized sweep kernels: per-x quantities are computed once per stripe
# when x has shape (n, 1) and u has shape (1, m).

def F_kernel(x, u, sharp: bool = False):
    k = 3 * u**2 - 2 * u**3
    A, dA = a3sq(x), _dA(x)
    P2 = A * (r1(x) + r3(x))
    P3 = dA * (r1(x) + r3(x)) + A * (_dr1(x) + _dr3(x))
    a4 = _a4(x)
    Q2 = A * a4
    Q3 = dA * a4 + A * _da4(x)
    a3 = np.sqrt(A)
    S2 = a3 * r2(x)
    S3 = dA / (2 * a3) * r2(x) + a3 * _dr2(x)
    P1 = _dr0(x)
    s = 3 * x**3 - 1
    nx2 = 9 * x**2
    one_k = 1 - k
    skk = 2 * np.sqrt(k * one_k)
    s1k = 2 * np.sqrt(one_k)
    inv = 1 / (1 + k * s)
    tk = nx2 * k * inv
    dC14 = P1 + one_k * inv * (P3 - tk * P2)
    dC2 = skk * inv * (Q3 - tk * Q2)
    dC3 = s1k * np.sqrt(inv) * (S3 - 0.5 * tk * S2)
    if sharp:
        return dC14 + np.hypot(dC2, dC3)
    return dC14 - dC2 - dC3
