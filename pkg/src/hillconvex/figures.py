"""The one-variable positivity checks and their scaled forms.

Each row pairs an unscaled function of x (the quantity whose sign matters)
with a polynomial-times-root rescaling ``g`` that is bounded on its interval
and is what the lattice sweep runs on.  All ``g`` are written with plain
operators so they also evaluate on intervals and dual numbers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from . import reduction as R
from .hill_core import X_CRIT

C3, C23, K43 = R.C3, R.C23, R.K43
SQRT2 = math.sqrt(2.0)


def _f9s(x):
    return -13 + 18 * C3 * x - 9.5 * x**3 + 6 * C3 * x**4 - x**6 / 2      # x^6 f9


def _r2s(x):
    return C3 + C23 * x + 3 * x**2 + K43 * x**3                          # x^5 r2


def _r0s(x):
    return 15 * C23 - 27 * x - 18 * C3 * x**2 + 5 * C23 * x**3 + 12 * x**4 + 9 * C3 * x**5


def _a3(x):
    return np.sqrt(3 + 2 * C23 / x)


def _hs(x):
    return -13 * x + 6 * K43 * x**2 - 7.5 * x**4 - 2 * K43 * x**5 + 5.5 * x**7   # x^7 h


def g2(x):
    return 1 - 3 * x**3 - 6.75 * x**6 - 2 * x**9


def g5(x):
    rad = 3 * x**3 + 2 - K43 * x
    return (11 / 12 - 10 / 3 * x**3 - 29 / 6 * x**6 + 4 * x**9 - 0.75 * x**12
            - 2 * (x**1.5 - 2 * x**4.5) * np.sqrt(rad) - (2 * x**6 + 2 * x**3) * rad)


def g9(x):
    return _f9s(x)


def g10(x):
    return -2 * x**3 * _r2s(x) ** 2 + _f9s(x) * _r0s(x)


def g11(x):
    return -2 * x * _f9s(x) * _a3(x) + 2 * SQRT2 * x**2 * _r2s(x)


def g12(x):
    a3 = _a3(x)
    return x * _f9s(x) * a3 * a3 - 2 * SQRT2 * x**2 * _r2s(x) * a3 + _r0s(x)


# Case bounds: U_i, m_i, M_i without the common factor a3^2.
_U = [lambda x: np.sqrt(2 * x) / (3 * x**3 + 2),
      lambda x: 1 / (2 * math.sqrt(3) * x),
      lambda x: np.sqrt(2 * x) / (6 * x**3 + 1),
      lambda x: np.sqrt(3 * x) / (9 * x**3 + 1),
      lambda x: 2 * np.sqrt(x) / (12 * x**3 + 1)]
_m = [lambda x: 2 / (3 * x**3 + 2),
      lambda x: 1 / (6 * x**3 + 1),
      lambda x: 1 / (9 * x**3 + 1),
      lambda x: 1 / (12 * x**3 + 1),
      lambda x: 0 * x]
_M = [lambda x: 1 + 0 * x,
      lambda x: 2 / (3 * x**3 + 2),
      lambda x: 1 / (6 * x**3 + 1),
      lambda x: 1 / (9 * x**3 + 1),
      lambda x: 1 / (12 * x**3 + 1)]


def case_g(i: int, which: str, u_case: Optional[int] = None) -> Callable:
    """x^7 · L_i^{m or M}(x).  ``u_case`` borrows U from another case."""
    U = _U[(u_case or i) - 1]
    t = (_m if which == "m" else _M)[i - 1]

    def g(x):
        A = 3 + 2 * C23 / x
        return _r0s(x) + 2 * SQRT2 * U(x) * A * (3 * x**8 - 9 * x**5) + t(x) * A * _hs(x)
    g.__name__ = f"g_L{i}{which}"
    return g


@dataclass(frozen=True)
class FigureRow:
    id: str
    g: Callable                 # scaled function swept by the certifier
    f: Callable                 # unscaled function
    lo: float
    hi: float
    scaling: str
    table_m: float              # tabulated lattice minimum
    right_open: bool = False    # interval stated as [lo, hi)


def _case_f(i, which):
    return lambda x: R.case_bounds(i, x)[0 if which == "m" else 1]


def figure_rows() -> List[FigureRow]:
    rows = [
        FigureRow("fig2", g2, R.warmup_lower_bound, 0.0, 0.54, "x^7", 0.3524),
        FigureRow("fig5", g5, R.radial_lower_bound, 0.0, 0.54, "x^7", 0.0453),
        FigureRow("fig9", g9, R.f9, 0.54, X_CRIT, "x^6", 0.2461, True),
        FigureRow("fig10", g10, R.g_x_discriminant_quarter, 0.56, X_CRIT, "-x^13", 1.8777, True),
        FigureRow("fig11", g11, R.g_x_slope_at_edge, 0.54, 0.56, "-x^7", 1.2197),
        FigureRow("fig12", g12, R.g_x_at_edge, 0.54, 0.56, "x^7", 2.7452),
    ]
    table = {(1, "m"): 2.6154, (1, "M"): 2.9192, (2, "m"): 0.5905, (2, "M"): 1.5023,
             (3, "m"): 0.5395, (3, "M"): 0.7966, (4, "m"): 0.9569, (4, "M"): 1.1176,
             (5, "m"): 0.8420, (5, "M"): 1.5383}
    for i in range(1, 6):
        for which in ("m", "M"):
            rows.append(FigureRow(f"fig{12 + i}{which}", case_g(i, which), _case_f(i, which),
                                  0.54, 0.63, "x^7", table[(i, which)]))
    return rows


CASE3_SPLIT = 6.0 ** (-1.0 / 3.0)


def supplementary_rows() -> List[FigureRow]:
    """Case 3 with the exact sup of the square-root term.

    Below x = 6^{-1/3} that sup is the global maximum (the case 2 value U_2),
    above it the tabulated U_3 is exact, so these rows cover the gap."""
    return [FigureRow(f"fig15{w}_sup", case_g(3, w, u_case=2),
                      lambda x, w=w: R.case_bounds_sup(3, x)[0 if w == "m" else 1],
                      0.54, CASE3_SPLIT, "x^7", math.nan) for w in "mM"]


FIGURE_IDS = [r.id for r in figure_rows()]


def get_row(fid: str) -> FigureRow:
    for r in figure_rows() + supplementary_rows():
        if r.id == fid:
            return r
    raise KeyError(fid)


# --------------------------------------------------------------------------
# Scalar functions exposed to the plot emitter

@dataclass(frozen=True)
class GraphFunc:
    name: str
    func: Callable
    domain: tuple               # one (lo, hi) per argument
    args: tuple                 # CSV column names

    @property
    def arity(self) -> int:
        return len(self.args)


def graph_registry() -> Dict[str, GraphFunc]:
    G = GraphFunc
    out = {
        "f2": G("f2", R.warmup_lower_bound, ((0.01, 0.54),), ("x",)),
        "f5": G("f5", R.radial_lower_bound, ((0.01, 0.54),), ("x",)),
        "f9": G("f9", R.f9, ((0.54, X_CRIT),), ("x",)),
        "f10": G("f10", R.g_x_discriminant_quarter, ((0.56, X_CRIT),), ("x",)),
        "f11": G("f11", R.g_x_slope_at_edge, ((0.54, 0.56),), ("x",)),
        "f12": G("f12", R.g_x_at_edge, ((0.54, 0.56),), ("x",)),
        "l_plus": G("l_plus", R.l_plus, ((0.54, X_CRIT), (0.0, 1.0)), ("x", "k")),
        "l_minus": G("l_minus", R.l_minus, ((0.54, 0.63), (0.0, 1.0)), ("x", "k")),
        "energy_gap": G("energy_gap", R.energy_gap, ((0.54, X_CRIT), (0.0, 1.0)), ("x", "k")),
        "F": G("F", R.F_xu, ((0.63, X_CRIT), (0.0, 1.0)), ("x", "u")),
        "F_sharp": G("F_sharp", R.F_sharp_xu, ((0.63, X_CRIT), (0.0, 1.0)), ("x", "u")),
        "d_corner": G("d_corner", R.d_corner_sos, ((0.0, 1.0), (0.0, math.pi / 2)), ("k", "alpha")),
        "d": G("d", R.d_func, ((0.63, X_CRIT), (0.0, 1.0), (0.0, math.pi / 2)), ("x", "k", "alpha")),
    }
    for i in range(1, 6):
        for which in ("m", "M"):
            n = f"f{12 + i}{which}"
            out[n] = G(n, _case_f(i, which), ((0.54, 0.63),), ("x",))
    for row in figure_rows():
        n = "g" + row.id[3:]
        out[n] = G(n, row.g, ((row.lo, row.hi),), ("x",))
    return out


def find_graph(name: str) -> Optional[GraphFunc]:
    return graph_registry().get(name)
