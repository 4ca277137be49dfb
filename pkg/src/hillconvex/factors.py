"""Abstract factors of the Step 3 derivative and their certified sups.

On the rectangle x in [0.63, 3^{-1/3}], u in [0, 1] with k = 3u^2 - 2u^3:

    a0 = (1 + k(3x^3 - 1))^{-1/2}    a1 = sqrt(1 - k)    a2 = sqrt(k)
    a3 = sqrt(3 + 2·3^{2/3}/x)        a4 = 9 x^{-3/2} - 3 x^{3/2}

Each function below is written with plain operators so it evaluates on
floats, arrays and :class:`~hillconvex.interval.Interval` boxes alike.
Factor ids are ``name`` plus one ``x``/``u`` per derivative, e.g. ``a0_xu``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from .hill_core import X_CRIT
from .interval import Interval, boxes

C23 = 3.0 ** (2.0 / 3.0)
X_LO = 0.63
X_HI = X_CRIT

# which variables each factor depends on
DEPENDS = {"a0": "xu", "a1": "u", "a2": "u", "a3": "x", "a4": "x"}


def _k(u):
    return 3 * u * u - 2 * u * u * u


def _kp(u):
    return 6 * u * (1 - u)


def _s(x):
    return 3 * x * x * x - 1


def _D(x, u):
    return 1 + _k(u) * _s(x)


def a0(x, u):
    return _D(x, u) ** -0.5


def a0_x(x, u):
    return -0.5 * _D(x, u) ** -1.5 * _k(u) * (9 * x * x)


def a0_u(x, u):
    return -0.5 * _D(x, u) ** -1.5 * _kp(u) * _s(x)


def a0_xx(x, u):
    D, k = _D(x, u), _k(u)
    sp = 9 * x * x
    return 0.75 * D ** -2.5 * (k * sp) ** 2 - 0.5 * D ** -1.5 * k * (18 * x)


def a0_xu(x, u):
    D, k, kp = _D(x, u), _k(u), _kp(u)
    sp = 9 * x * x
    return 0.75 * D ** -2.5 * kp * _s(x) * k * sp - 0.5 * D ** -1.5 * kp * sp


def a1(u):
    return (1 - u) * np.sqrt(1 + 2 * u)


def a1_u(u):
    return -3 * u / np.sqrt(1 + 2 * u)


def a2(u):
    return u * np.sqrt(3 - 2 * u)


def a2_u(u):
    return 3 * (1 - u) / np.sqrt(3 - 2 * u)


def a3(x):
    return np.sqrt(3 + 2 * C23 / x)


def a3_x(x):
    return -C23 / (x * x * a3(x))


def a3_xx(x):
    A = a3(x)
    return 2 * C23 / (x ** 3 * A) - C23 ** 2 / (x ** 4 * A ** 3)


def a4(x):
    return 9 * x ** -1.5 - 3 * x ** 1.5


def a4_x(x):
    return -13.5 * x ** -2.5 - 4.5 * x ** 0.5


def a4_xx(x):
    return 33.75 * x ** -3.5 - 2.25 * x ** -0.5


FACTOR_FUNCS: Dict[str, Callable] = {
    "a0": a0, "a0_x": a0_x, "a0_u": a0_u, "a0_xx": a0_xx, "a0_xu": a0_xu,
    "a1": a1, "a1_u": a1_u, "a2": a2, "a2_u": a2_u,
    "a3": a3, "a3_x": a3_x, "a3_xx": a3_xx,
    "a4": a4, "a4_x": a4_x, "a4_xx": a4_xx,
}

A3_SUP = math.sqrt(3 + 2 * C23 / X_LO)


def table_factor_bounds(a3x: float = 1.7) -> Dict[str, float]:
    """The tabulated factor bounds; ``a3x`` picks the |∂x a3| entry, which is
    listed both as 1.7 and as 1.8."""
    return {"a0": 1.2, "a0_x": 3.4, "a0_u": 0.3, "a0_xx": 15.0, "a0_xu": 1.7,
            "a1": 1.0, "a1_u": math.sqrt(3), "a2": 1.0, "a2_u": math.sqrt(3),
            "a3": A3_SUP, "a3_x": a3x, "a3_xx": 5.0,
            "a4": 16.5, "a4_x": 46.5, "a4_xx": 168.0}


def factor_id(name: str, dx: int, du: int) -> str:
    suffix = "x" * dx + "u" * du
    return name + ("_" + suffix if suffix else "")


# --------------------------------------------------------------------------
# Certified sups

# Factors whose sup is attained at an endpoint: id -> (derivative of |factor|
# used for the monotonicity proof, direction, endpoint where sup is attained).
def _abs_a1u_deriv(u):
    return 3 * (1 + u) / (1 + 2 * u) ** 1.5


def _a2u_deriv(u):
    return (3 * u - 6) / (3 - 2 * u) ** 1.5


_MONOTONE = {
    "a1": (a1_u, "dec", 0.0),            # a1' <= 0, sup |a1| at u=0
    "a1_u": (_abs_a1u_deriv, "inc", 1.0),  # |a1'| = 3u/sqrt(1+2u) increasing
    "a2": (a2_u, "inc", 1.0),
    "a2_u": (_a2u_deriv, "dec", 0.0),
    "a3": (a3_x, "dec", X_LO),
    "a4": (a4_x, "dec", X_LO),
}


@dataclass(frozen=True)
class FactorBoundRow:
    factor: str
    method: str            # "boxes" or "monotone"
    certified_sup: float   # rigorous upper bound of sup |factor|
    tabulated: Optional[float]
    holds: Optional[bool]  # certified_sup <= tabulated (None without a table)


def certified_sup(fid: str, n_1d: int = 4000, n_2d: int = 400) -> tuple:
    """Rigorous upper bound of sup |factor| on the rectangle, and the method."""
    f = FACTOR_FUNCS[fid]
    name = fid.split("_")[0]
    if fid in _MONOTONE:
        deriv, kind, end = _MONOTONE[fid]
        lo, hi = (0.0, 1.0) if DEPENDS[name] == "u" else (X_LO, X_HI)
        d = deriv(boxes(lo, hi, n_1d))
        # outward rounding turns an exact 0 derivative at an endpoint into a
        # subnormal; a slope of that size changes the sup by nothing visible
        slack = 1e-300
        ok = np.all(d.hi <= slack) if kind == "dec" else np.all(d.lo >= -slack)
        if ok:
            v = f(Interval(end))
            return float(np.max(v.mag())) + slack * (hi - lo), "monotone"
    if DEPENDS[name] == "xu":
        xb = boxes(X_LO, X_HI, n_2d)
        ub = boxes(0.0, 1.0, n_2d)
        X = Interval(xb.lo[:, None], xb.hi[:, None])
        U = Interval(ub.lo[None, :], ub.hi[None, :])
        return float(np.max(f(X, U).mag())), "boxes"
    lo, hi = (0.0, 1.0) if DEPENDS[name] == "u" else (X_LO, X_HI)
    return float(np.max(f(boxes(lo, hi, n_1d)).mag())), "boxes"


def verify_factor_bounds(table: Optional[Dict[str, float]] = None,
                         n_1d: int = 4000, n_2d: int = 400) -> List[FactorBoundRow]:
    """Certify each factor's sup and compare against ``table``.

    Attained bounds (e.g. |a1| <= 1 at u = 0) need the monotone route: an
    interval enclosure of the derivative proves monotonicity and the sup is
    the endpoint value.  The comparison allows a relative 1e-12 for bounds
    tabulated as the exact attained value."""
    rows = []
    for fid in FACTOR_FUNCS:
        sup, method = certified_sup(fid, n_1d, n_2d)
        tab = None if table is None else table.get(fid)
        holds = None if tab is None else bool(sup <= tab * (1 + 1e-12))
        rows.append(FactorBoundRow(fid, method, sup, tab, holds))
    return rows


def certified_factor_bounds(n_1d: int = 4000, n_2d: int = 400) -> Dict[str, float]:
    return {r.factor: r.certified_sup for r in verify_factor_bounds(None, n_1d, n_2d)}
