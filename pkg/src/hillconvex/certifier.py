"""Lattice sweeps with derivative-bound certificates.

One variable: if m is the minimum of g over a lattice with gaps at most eps
covering [lo, hi] (right end included) and |g'| <= B, then every point lies
within eps/2 of a lattice point and g >= m - eps·B/2 everywhere.  The
certificate asks for the stronger m - eps·B - float_budget > 0.

Two variables: the same with per-axis steps and bounds and a maximum M < 0.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import factors as FAC
from . import figures as FIG
from . import reduction as R
from . import termsum as TS
from .errors import ConfigError, SweepError
from .hill_core import X_CRIT
from .interval import Dual, Interval, sup_abs_derivative

REPORT_VERSION = "hillconvex-report/1"
UNIT_ROUNDOFF = 2.0 ** -52

REF_EPS_1D = 1e-6
REF_B_1D = 4e4
REF_EPS_X = 1 / 2.05e5
REF_EPS_U = 1 / 4.59e4
REF_B_X = 2.040754753e6
REF_B_U = 4.580163896e5
REF_M_BOUND = -19.0


# --------------------------------------------------------------------------
# Float budget

@dataclass(frozen=True)
class FloatMeta:
    """Operation count and magnitude envelope of one function evaluation."""
    ops: int
    magnitude: float


def float_error_budget(meta: Optional[FloatMeta], safety: float = 8.0) -> float:
    if meta is None or meta.ops == 0:
        return 0.0
    return meta.ops * meta.magnitude * UNIT_ROUNDOFF * safety


# --------------------------------------------------------------------------
# Lattices

@dataclass(frozen=True)
class Grid1DSpec:
    lo: float
    hi: float
    eps: float
    B: float

    def __post_init__(self):
        if not (self.lo < self.hi):
            raise ConfigError(f"need lo < hi, got [{self.lo}, {self.hi}]")
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if not (self.B > 0):
            raise ConfigError(f"B must be positive, got {self.B}")


def lattice_size(lo: float, hi: float, eps: float) -> int:
    """Number of points lo + i·eps < hi, plus one for hi."""
    n = int(math.ceil((hi - lo) / eps)) + 1
    while n > 1 and lo + (n - 2) * eps >= hi:
        n -= 1
    while lo + (n - 1) * eps < hi:
        n += 1
    return n


def lattice_chunk(lo: float, hi: float, eps: float, start: int, stop: int) -> np.ndarray:
    """Points with index in [start, stop) of the lattice; the last index is hi."""
    n = lattice_size(lo, hi, eps)
    idx = np.arange(start, min(stop, n), dtype=float)
    pts = lo + idx * eps
    if stop >= n and len(pts):
        pts[-1] = hi
    return pts


def lattice(lo: float, hi: float, eps: float) -> np.ndarray:
    return lattice_chunk(lo, hi, eps, 0, lattice_size(lo, hi, eps))


def _check_finite(v, pts, where):
    bad = ~np.isfinite(v)
    if np.any(bad):
        i = np.argmax(bad.ravel())
        raise SweepError(f"non-finite value of {where} at lattice point {pts(i)!r}")


def sweep_min_1d(f: Callable, spec: Grid1DSpec, block: int = 1 << 18) -> Tuple[float, float]:
    """Exact lattice minimum and its first (smallest) minimizer."""
    n = lattice_size(spec.lo, spec.hi, spec.eps)
    best, arg = math.inf, spec.lo
    for s in range(0, n, block):
        x = lattice_chunk(spec.lo, spec.hi, spec.eps, s, s + block)
        try:
            with np.errstate(all="ignore"):
                v = np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)
        except (ValueError, ArithmeticError) as e:
            raise SweepError(f"evaluation failed in block starting at x={x[0]!r}: {e}") from e
        _check_finite(v, lambda i: float(x[i]), getattr(f, "__name__", "f"))
        i = int(np.argmin(v))
        if v[i] < best:
            best, arg = float(v[i]), float(x[i])
    return best, arg


# --------------------------------------------------------------------------
# Certificates

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, (tuple, list)):
        return "[" + ", ".join(_fmt(t) for t in v) + "]"
    return str(v)


@dataclass
class Certificate1D:
    id: str
    function: str
    interval: Tuple[float, float]
    eps: float
    B: float
    m: float
    witness: float
    float_budget: float
    margin: float = field(init=False)
    verdict: str = field(init=False)
    certifying: bool = True
    B_source: str = "given"

    def __post_init__(self):
        self.margin = self.m - self.eps * self.B - self.float_budget
        ok = self.margin > 0 and self.B_source != "constant-violated"
        self.verdict = "pass" if ok else "fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def recheck(self) -> bool:
        """Verdict recomputed from the stored numbers alone."""
        ok = self.m - self.eps * self.B - self.float_budget > 0
        return (ok and self.B_source != "constant-violated") == self.passed

    def to_items(self) -> List[Tuple[str, str]]:
        keys = ["id", "function", "interval", "eps", "B", "B_source", "m", "witness",
                "float_budget", "margin", "verdict", "certifying"]
        d = asdict(self)
        return [(k, _fmt(d[k])) for k in keys]


@dataclass
class Certificate2D:
    id: str
    function: str
    rect: Tuple[Tuple[float, float], Tuple[float, float]]
    eps_x: float
    eps_u: float
    B_x: float
    B_u: float
    M: float
    witness: Tuple[float, float]
    float_budget: float
    evaluations: int = 0
    margin_x: float = field(init=False)
    margin_u: float = field(init=False)
    margin: float = field(init=False)
    verdict: str = field(init=False)
    certifying: bool = True
    B_source: str = "given"

    def __post_init__(self):
        a = -self.M
        self.margin_x = a - self.eps_x * self.B_x - self.float_budget
        self.margin_u = a - self.eps_u * self.B_u - self.float_budget
        self.margin = min(self.margin_x, self.margin_u)
        self.verdict = "pass" if (self.M < 0 and self.margin > 0) else "fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def recheck(self) -> bool:
        a = -self.M
        ok = (self.M < 0 and a - self.eps_x * self.B_x - self.float_budget > 0
              and a - self.eps_u * self.B_u - self.float_budget > 0)
        return ok == self.passed

    def to_items(self) -> List[Tuple[str, str]]:
        keys = ["id", "function", "rect", "eps_x", "eps_u", "B_x", "B_u", "B_source", "M",
                "witness", "evaluations", "float_budget", "margin_x", "margin_u", "margin",
                "verdict", "certifying"]
        d = asdict(self)
        return [(k, _fmt(d[k])) for k in keys]


def certify_positive_1d(f: Callable, spec: Grid1DSpec, meta: Optional[FloatMeta] = None,
                        id: str = "", name: Optional[str] = None,
                        certifying: bool = True, B_source: str = "given") -> Certificate1D:
    m, w = sweep_min_1d(f, spec)
    return Certificate1D(id or getattr(f, "__name__", "f"), name or getattr(f, "__name__", "f"),
                         (spec.lo, spec.hi), spec.eps, spec.B, m, w,
                         float_error_budget(meta), certifying=certifying, B_source=B_source)


# --------------------------------------------------------------------------
# Two-variable sweep

def _stripe_max(F, lo_x, hi_x, eps_x, lo_u, hi_u, eps_u, start, stop, block_rows):
    u = lattice(lo_u, hi_u, eps_u)[None, :]
    best, arg = -math.inf, (lo_x, lo_u)
    for s in range(start, stop, block_rows):
        x = lattice_chunk(lo_x, hi_x, eps_x, s, min(s + block_rows, stop))[:, None]
        with np.errstate(all="ignore"):
            v = np.broadcast_to(np.asarray(F(x, u), dtype=float), (x.shape[0], u.shape[1]))
        _check_finite(v, lambda i: (float(x[i // u.shape[1], 0]), float(u[0, i % u.shape[1]])),
                      getattr(F, "__name__", "F"))
        i = int(np.argmax(v))
        a, b = divmod(i, u.shape[1])
        if v[a, b] > best:
            best, arg = float(v[a, b]), (float(x[a, 0]), float(u[0, b]))
    return best, arg


def _stripes(n: int, k: int) -> List[Tuple[int, int]]:
    edges = [round(i * n / k) for i in range(k + 1)]
    return [(edges[i], edges[i + 1]) for i in range(k) if edges[i] < edges[i + 1]]


def sweep_max_2d(F: Callable, rect, eps_x: float, eps_u: float, stripes: int = 1,
                 workers: int = 1, block_rows: int = 64,
                 progress: Optional[Callable[[int, int, float], None]] = None):
    """Lattice maximum of F(x_column, u_row) and its first maximizer.

    The x-lattice is split into ``stripes`` contiguous pieces; ties are broken
    towards the smaller (x, u), so the result does not depend on ``stripes``
    or ``workers``."""
    (lo_x, hi_x), (lo_u, hi_u) = rect
    if not (lo_x < hi_x and lo_u < hi_u and eps_x > 0 and eps_u > 0):
        raise ConfigError("bad rectangle or steps")
    if stripes < 1 or workers < 1:
        raise ConfigError("stripes and workers must be >= 1")
    nx = lattice_size(lo_x, hi_x, eps_x)
    parts = _stripes(nx, stripes)
    args = [(F, lo_x, hi_x, eps_x, lo_u, hi_u, eps_u, a, b, block_rows) for a, b in parts]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_stripe_max, *zip(*args)))
    else:
        results = []
        for j, a in enumerate(args):
            results.append(_stripe_max(*a))
            if progress:
                progress(j + 1, len(args), results[-1][0])
    best, arg = -math.inf, (lo_x, lo_u)
    for v, w in results:            # stripes are in x order: keep the first
        if v > best:
            best, arg = v, w
    return best, arg


def lattice_count_2d(rect, eps_x, eps_u) -> int:
    (lo_x, hi_x), (lo_u, hi_u) = rect
    return lattice_size(lo_x, hi_x, eps_x) * lattice_size(lo_u, hi_u, eps_u)


def certify_negative_2d(F: Callable, rect, eps_x: float, eps_u: float, B_x: float, B_u: float,
                        meta: Optional[FloatMeta] = None, id: str = "", name: Optional[str] = None,
                        stripes: int = 1, workers: int = 1, certifying: bool = True,
                        B_source: str = "given", progress=None) -> Certificate2D:
    M, w = sweep_max_2d(F, rect, eps_x, eps_u, stripes=stripes, workers=workers,
                        progress=progress)
    return Certificate2D(id or getattr(F, "__name__", "F"), name or getattr(F, "__name__", "F"),
                         tuple(map(tuple, rect)), eps_x, eps_u, B_x, B_u, M, w,
                         float_error_budget(meta), lattice_count_2d(rect, eps_x, eps_u),
                         certifying=certifying, B_source=B_source)


# --------------------------------------------------------------------------
# The figure suite

# Declared cost of one evaluation of each scaled figure function: op count
# and an envelope for the intermediate magnitudes on its interval.
FIGURE_META = FloatMeta(ops=200, magnitude=1e4)
FINAL_META = FloatMeta(ops=300, magnitude=1e6)


def measured_max_derivative(g: Callable, lo: float, hi: float, step: float = 1e-3) -> float:
    """max |g'| on the coarse lattice, by forward-mode differentiation."""
    x = lattice(lo, hi, step)
    with np.errstate(all="ignore"):
        d = g(Dual(x, np.ones_like(x))).der
    d = np.asarray(d, dtype=float)
    return float(np.max(np.abs(d[np.isfinite(d)])))


def rigorous_derivative_bound(g: Callable, lo: float, hi: float, n: int = 20000) -> float:
    return sup_abs_derivative(g, lo, hi, n)


def figure_suite(bounds: str = "constant", eps: float = REF_EPS_1D, only: Sequence[str] = (),
                 B: float = REF_B_1D) -> List[Certificate1D]:
    """Certificates for the sixteen one-variable rows.

    ``bounds="constant"`` uses the constant B for every row (checked against the
    measured max |g'| on a 1e-3 lattice); ``bounds="rigorous"`` uses an
    interval-arithmetic enclosure of g' instead."""
    if bounds not in ("constant", "rigorous"):
        raise ConfigError(f"unknown bounds mode {bounds!r}")
    rows = FIG.figure_rows()
    if only:
        rows = rows + FIG.supplementary_rows()
        unknown = set(only) - {r.id for r in rows}
        if unknown:
            raise ConfigError(f"unknown figure ids {sorted(unknown)}")
        rows = [r for r in rows if r.id in only]
    out = []
    certifying = eps == REF_EPS_1D and B == REF_B_1D
    for r in rows:
        if bounds == "constant":
            b, src = B, "constant"
            if measured_max_derivative(r.g, r.lo, r.hi) >= b:
                src = "constant-violated"
        else:
            b, src = rigorous_derivative_bound(r.g, r.lo, r.hi), "interval"
        cert = certify_positive_1d(r.g, Grid1DSpec(r.lo, r.hi, eps, b), FIGURE_META,
                                   id=r.id, name=f"{r.scaling}*{r.f.__name__}",
                                   certifying=certifying or bounds == "rigorous", B_source=src)
        out.append(cert)
    return out


# --------------------------------------------------------------------------
# The final two-variable certificate

FINAL_RECT = ((0.63, X_CRIT), (0.0, 1.0))


def F_reference(x, u):
    return R.F_kernel(x, u, sharp=False)


def F_sharp(x, u):
    return R.F_kernel(x, u, sharp=True)


@dataclass
class FinalReport:
    variant: str
    factor_rows: List[FAC.FactorBoundRow]
    bounds_ok: bool
    B_x: float
    B_u: float
    B_source: str
    B_x_table: float
    B_u_table: float
    certificate: Optional[Certificate2D]
    stage_failed: Optional[str]

    @property
    def passed(self) -> bool:
        return self.stage_failed is None


def final_certificate(variant: str = "sharp", eps_x: float = REF_EPS_X,
                      eps_u: float = REF_EPS_U, stripes: int = 1, workers: int = 1,
                      progress=None, a3x_table: float = 1.7) -> FinalReport:
    """Factor table check, B_x/B_u, then the two-variable sweep.

    ``variant="reference"`` sweeps ∂C1 - ∂C2 - ∂C3 + ∂C4 with B from the tabulated
    factor bounds.  ``variant="sharp"`` sweeps ∂(C1+C4) + hypot(∂C2, ∂C3),
    which still bounds ∂d/∂x from above, with B from certified factor sups.
    The sweep runs even when an earlier stage fails so the report is complete;
    the first failing stage is recorded."""
    if variant not in ("reference", "sharp"):
        raise ConfigError(f"unknown variant {variant!r}")
    table = FAC.table_factor_bounds(a3x_table)
    rows = FAC.verify_factor_bounds(table)
    bounds_ok = all(r.holds for r in rows)
    Bx_tab, Bu_tab = TS.F_bounds(table)
    certified = {r.factor: r.certified_sup for r in rows}
    if variant == "reference":
        Bx, Bu, src, F = Bx_tab, Bu_tab, "factor-table", F_reference
    else:
        Bx, Bu = TS.F_sharp_bounds(certified)
        src, F = "certified-factors", F_sharp
    certifying = eps_x == REF_EPS_X and eps_u == REF_EPS_U
    cert = certify_negative_2d(F, FINAL_RECT, eps_x, eps_u, Bx, Bu, FINAL_META,
                               id=f"final-{variant}", name=F.__name__, stripes=stripes,
                               workers=workers, certifying=certifying, B_source=src,
                               progress=progress)
    stage = None
    if variant == "reference" and not bounds_ok:
        stage = "bounds"
    elif cert.M >= 0:
        stage = "sweep"
    elif not cert.passed:
        stage = "margin"
    return FinalReport(variant, rows, bounds_ok, Bx, Bu, src, Bx_tab, Bu_tab, cert, stage)


# --------------------------------------------------------------------------
# Report rendering

def render_report(sections: Sequence[Tuple[str, List[Tuple[str, str]]]], meta: Dict[str, str]) -> str:
    """Versioned key-value text: a header, then one block per section."""
    lines = [f"format: {REPORT_VERSION}"]
    for k, v in meta.items():
        lines.append(f"{k}: {v}")
    for title, items in sections:
        lines.append("")
        lines.append(f"[{title}]")
        for k, v in items:
            lines.append(f"{k}: {v}")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> Dict[str, Dict[str, str]]:
    out: Dict[str, Dict[str, str]] = {"": {}}
    cur = ""
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("[") and line.endswith("]"):
            cur = line[1:-1]
            out[cur] = {}
            continue
        k, _, v = line.partition(": ")
        out[cur][k] = v
    return out


def certificate1d_from_items(items: Dict[str, str]) -> Certificate1D:
    """Rebuild a one-variable certificate from its report block."""
    lo, hi = (float(t) for t in items["interval"].strip("[]").split(","))
    c = Certificate1D(items["id"], items["function"], (lo, hi), float(items["eps"]),
                      float(items["B"]), float(items["m"]), float(items["witness"]),
                      float(items["float_budget"]), certifying=items["certifying"] == "true",
                      B_source=items["B_source"])
    return c


# --------------------------------------------------------------------------
# The three steps of the positivity argument

@dataclass
class StepResult:
    step: int
    passed: bool
    items: List[Tuple[str, str]]
    certificates: list


def _grid_item(name, value, passed):
    return [(f"{name}", _fmt(float(value))), (f"{name}_ok", _fmt(bool(passed)))]


def verify_steps(bounds: str = "rigorous", variant: str = "sharp", eps: float = REF_EPS_1D,
                 eps_x: float = REF_EPS_X, eps_u: float = REF_EPS_U, stripes: int = 1,
                 workers: int = 1, only: Sequence[int] = (1, 2, 3), progress=None) -> List[StepResult]:
    """Step 1: |q| <= 0.54.  Step 2: 0.54 <= |q| <= 0.63 and the l_plus side.
    Step 3: the region near the corner, via monotonicity in x."""
    out = []
    if 1 in only:
        certs = figure_suite(bounds, eps, only=["fig5"])
        out.append(StepResult(1, all(c.passed for c in certs), [], certs))
    if 2 in only:
        x = np.linspace(0.54, X_CRIT, 100, endpoint=False)[:, None]
        k = np.linspace(0.0, 1.0, 100)[None, :]
        lp = float(np.min(R.l_plus(x, k)))
        x2 = np.linspace(0.54, 0.63, 100)[:, None]
        lm = float(np.min(R.l_minus(x2, k)))
        ids = (["fig9", "fig10", "fig11", "fig12"]
               + [f"fig{12 + i}{w}" for i in range(1, 6) for w in "mM"]
               + [r.id for r in FIG.supplementary_rows()])
        certs = figure_suite(bounds, eps, only=ids)
        items = _grid_item("l_plus_grid_min", lp, lp > 0) + _grid_item("l_minus_grid_min", lm, lm > 0)
        ok = lp > 0 and lm > 0 and all(c.passed for c in certs)
        out.append(StepResult(2, ok, items, certs))
    if 3 in only:
        X = np.linspace(0.63, X_CRIT, 100)[:, None, None]
        K = np.linspace(0.0, 1.0, 100)[None, :, None]
        A = np.linspace(0.0, math.pi / 2, 50)[None, None, :]
        h = 1e-6
        fd = float(np.max((R.d_func(X + h, K, A) - R.d_func(X - h, K, A)) / (2 * h)))
        kk = np.linspace(0.0, 1.0, 500)[:, None]
        aa = np.linspace(0.0, math.pi / 2, 500)[None, :]
        raw = R.d_func(X_CRIT, kk, aa)
        sos = R.d_corner_sos(kk, aa)
        corner_err = float(np.max(np.abs(raw - sos)))
        zero = float(R.d_corner(2 / 3, math.asin(1 / math.sqrt(3))))
        c45 = float(np.min(R.dC45_over_1mk(X[:, :, 0], K[:, :, 0])))
        rep = final_certificate(variant, eps_x, eps_u, stripes=stripes, workers=workers,
                                progress=progress)
        items = (_grid_item("dd_dx_fd_max", fd, fd < 0)
                 + _grid_item("corner_identity_max_err", corner_err, corner_err < 1e-9)
                 + [("corner_zero_at", _fmt((2 / 3, math.asin(1 / math.sqrt(3))))),
                    ("corner_value_at_zero", _fmt(zero))]
                 + _grid_item("dC4_minus_dC5_over_1mk_min", c45, c45 > 0))
        ok = fd < 0 and corner_err < 1e-9 and abs(zero) < 1e-9 and c45 > 0 and rep.passed
        out.append(StepResult(3, ok, items, [rep]))
    return out
