"""Command-line front end.

    hillconvex verify figures|final|steps [flags]
    hillconvex oracle [--trials N] [--seed N]
    hillconvex emit hill-region|fiber|flow|disk|graph:<name> [flags]

Exit codes: 0 pass, 1 certificate failure, 2 configuration error,
3 evaluation or domain error.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from . import certifier as CERT
from . import figures as FIG
from . import hill_core as HC
from . import oracle as ORC
from .errors import ConfigError, HillError

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_EVAL = 0, 1, 2, 3


@dataclass
class RunConfig:
    command: str
    target: str = ""
    out: str = "hillconvex-out"
    seed: int = 0
    eps: float = CERT.REF_EPS_1D
    eps_x: float = CERT.REF_EPS_X
    eps_u: float = CERT.REF_EPS_U
    stripes: int = 8
    workers: int = 1
    only: Tuple[str, ...] = ()
    bounds: Optional[str] = None
    variant: str = "sharp"
    n: Optional[int] = None
    p: Tuple[float, float] = (0.0, 0.0)
    q: Tuple[float, float] = (0.45, 0.1)
    c: Optional[float] = None
    dt: float = 1e-4
    trials: int = 1000
    plot: bool = True

    @classmethod
    def from_namespace(cls, ns: argparse.Namespace) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        extra = set(vars(ns)) - known - {"no_plot"}
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        d = {k: v for k, v in vars(ns).items() if k in known and v is not None}
        d["plot"] = not getattr(ns, "no_plot", False)
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        for name in ("eps", "eps_x", "eps_u", "dt"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ConfigError(f"--{name.replace('_', '-')} must be positive")
        if self.stripes < 1 or self.workers < 1:
            raise ConfigError("--stripes and --workers must be >= 1")
        if self.trials < 1:
            raise ConfigError("--trials must be >= 1")
        if self.n is not None and self.n < 2:
            raise ConfigError("--n must be >= 2")
        if self.bounds not in (None, "constant", "rigorous"):
            raise ConfigError("--bounds must be constant or rigorous")
        if self.variant not in ("reference", "sharp"):
            raise ConfigError("--variant must be reference or sharp")


def _pair(text: str) -> Tuple[float, float]:
    try:
        a, b = (float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}")
    return a, b


def _ids(text: str) -> Tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--out", help="output directory (default hillconvex-out)")
    g.add_argument("--seed", type=int)
    g.add_argument("--eps", type=float, help="1-D lattice step")
    g.add_argument("--eps-x", type=float, dest="eps_x")
    g.add_argument("--eps-u", type=float, dest="eps_u")
    g.add_argument("--stripes", type=int, help="x-stripes for the 2-D sweep")
    g.add_argument("--workers", type=int, help="processes for the 2-D sweep")
    g.add_argument("--only", type=_ids, help="comma-separated row or step ids")
    g.add_argument("--bounds", choices=["constant", "rigorous"])
    g.add_argument("--variant", choices=["reference", "sharp"])
    g.add_argument("--n", type=int, help="sample count per axis / steps")
    g.add_argument("--p", type=_pair, help="fiber base point, e.g. 0,0")
    g.add_argument("--q", type=_pair, help="position, e.g. 0.45,0.1")
    g.add_argument("--c", type=float, help="energy parameter")
    g.add_argument("--dt", type=float)
    g.add_argument("--trials", type=int)
    g.add_argument("--no-plot", action="store_true", dest="no_plot")

    ap = argparse.ArgumentParser(prog="hillconvex", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", parents=[common], help="run certificates")
    v.add_argument("target", choices=["figures", "final", "steps"])
    sub.add_parser("oracle", parents=[common], help="oracle Monte-Carlo battery")
    e = sub.add_parser("emit", parents=[common], help="write data files")
    e.add_argument("target")
    return ap


# --------------------------------------------------------------------------

def _outdir(cfg: RunConfig) -> Path:
    d = Path(cfg.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_report(cfg: RunConfig, name: str, sections, extra_meta=()) -> str:
    meta = {"command": name, "version": __version__, "seed": str(cfg.seed)}
    meta.update(dict(extra_meta))
    text = CERT.render_report(sections, meta)
    (_outdir(cfg) / f"{name.replace(' ', '_')}.txt").write_text(text)
    sys.stdout.write(text)
    return text


def _timing(cfg: RunConfig, name: str, seconds: float, evaluations: int = 0) -> None:
    line = f"{name}: wall_time_s={seconds:.3f} evaluations={evaluations}\n"
    sys.stderr.write(line)
    with open(_outdir(cfg) / "timing.txt", "a") as fh:
        fh.write(line)


def _progress(j, n, best):
    sys.stderr.write(f"  stripe {j}/{n} max={best:.6g}\n")


def cmd_verify_figures(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    bounds = cfg.bounds or "constant"
    certs = CERT.figure_suite(bounds, cfg.eps, only=cfg.only)
    sections = []
    for c in certs:
        row = FIG.get_row(c.id)
        items = c.to_items() + [("table_m", CERT._fmt(row.table_m)),
                                ("m_minus_table", CERT._fmt(c.m - row.table_m))]
        sections.append((c.id, items))
    ok = all(c.passed for c in certs)
    summary = [("rows", str(len(certs))), ("passed", str(sum(c.passed for c in certs))),
               ("bounds", bounds), ("verdict", "pass" if ok else "fail")]
    if not ok:
        summary.append(("first_failure", next(c.id for c in certs if not c.passed)))
    _write_report(cfg, "verify figures", [("summary", summary)] + sections)
    if cfg.plot:
        from .plotting import plot_certificates
        plot_certificates([c.id for c in certs], [c.margin for c in certs],
                          _outdir(cfg) / "verify_figures.png", f"lattice margins ({bounds})")
    n = sum(CERT.lattice_size(*c.interval, c.eps) for c in certs)
    _timing(cfg, "verify figures", time.perf_counter() - t0, n)
    return EXIT_PASS if ok else EXIT_FAIL


def _final_sections(rep: CERT.FinalReport):
    fac = []
    for r in rep.factor_rows:
        tab = "none" if r.tabulated is None else CERT._fmt(float(r.tabulated))
        fac.append((r.factor, f"sup<={CERT._fmt(r.certified_sup)} table={tab} "
                              f"method={r.method} holds={CERT._fmt(bool(r.holds))}"))
    rel = lambda a, b: CERT._fmt(abs(a - b) / b)
    bvals = [("variant", rep.variant), ("B_source", rep.B_source),
             ("B_x", CERT._fmt(rep.B_x)), ("B_u", CERT._fmt(rep.B_u)),
             ("B_x_from_factor_table", CERT._fmt(rep.B_x_table)),
             ("B_u_from_factor_table", CERT._fmt(rep.B_u_table)),
             ("B_x_reference", CERT._fmt(CERT.REF_B_X)),
             ("B_u_reference", CERT._fmt(CERT.REF_B_U)),
             ("B_x_table_rel_dev", rel(rep.B_x_table, CERT.REF_B_X)),
             ("B_u_table_rel_dev", rel(rep.B_u_table, CERT.REF_B_U))]
    cert = rep.certificate
    summary = [("factor_table_holds", CERT._fmt(rep.bounds_ok)),
               ("M_below_reference_bound", CERT._fmt(bool(cert.M < CERT.REF_M_BOUND))),
               ("stage_failed", rep.stage_failed or "none"),
               ("verdict", "pass" if rep.passed else "fail")]
    return [("final summary", summary), ("factor bounds", fac), ("derivative bounds", bvals),
            (cert.id, cert.to_items())]


def cmd_verify_final(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    rep = CERT.final_certificate(cfg.variant, cfg.eps_x, cfg.eps_u, stripes=cfg.stripes,
                                 workers=cfg.workers, progress=_progress)
    _write_report(cfg, "verify final", _final_sections(rep))
    _timing(cfg, "verify final", time.perf_counter() - t0, rep.certificate.evaluations)
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_verify_steps(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    steps = tuple(int(s) for s in cfg.only) if cfg.only else (1, 2, 3)
    if not set(steps) <= {1, 2, 3}:
        raise ConfigError("--only for steps takes ids among 1,2,3")
    res = CERT.verify_steps(cfg.bounds or "rigorous", cfg.variant, cfg.eps, cfg.eps_x,
                            cfg.eps_u, cfg.stripes, cfg.workers, steps, progress=_progress)
    sections = [("steps summary", [(f"step{r.step}", "pass" if r.passed else "fail")
                                   for r in res])]
    for r in res:
        sections.append((f"step{r.step}", r.items + [("verdict", "pass" if r.passed else "fail")]))
        for c in r.certificates:
            if isinstance(c, CERT.FinalReport):
                for title, items in _final_sections(c):
                    sections.append((f"step{r.step} {title}", items))
            else:
                sections.append((f"step{r.step} {c.id}", c.to_items()))
    _write_report(cfg, "verify steps", sections)
    _timing(cfg, "verify steps", time.perf_counter() - t0)
    return EXIT_PASS if all(r.passed for r in res) else EXIT_FAIL


def cmd_oracle(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    rows = ORC.run_battery(cfg.trials, cfg.seed)
    items = []
    for r in rows:
        items.append((r.name, f"{CERT._fmt(float(r.value))} threshold={CERT._fmt(float(r.threshold))} "
                              f"{'pass' if r.passed else 'fail'}"))
    ok = all(r.passed for r in rows)
    mode = "full" if cfg.trials >= 1000 else "smoke (non-certifying)"
    _write_report(cfg, "oracle", [("oracle", [("trials", str(cfg.trials)), ("mode", mode)] + items),
                                  ("summary", [("verdict", "pass" if ok else "fail")])])
    _timing(cfg, "oracle", time.perf_counter() - t0)
    return EXIT_PASS if ok else EXIT_FAIL


# --------------------------------------------------------------------------
# emit

def _write_csv(path: Path, header: Sequence[str], rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format(float(v), ".17g") for v in row])
    return path


def emit_hill_region(cfg: RunConfig) -> List[Path]:
    n = cfg.n or 2000
    b = cfg.c if cfg.c is not None else HC.C0
    th = 2 * math.pi * np.arange(n) / n
    r = HC.cubic_smallest_positive_root_array(np.full(n, b), th)
    q1, q2 = r * np.cos(th), r * np.sin(th)
    d = _outdir(cfg)
    out = [_write_csv(d / "hill_region.csv", ["theta", "q1", "q2"], zip(th, q1, q2))]
    if cfg.plot:
        from .plotting import plot_curve
        out.append(plot_curve(np.column_stack([q1, q2]), d / "hill_region.png",
                              f"region boundary, c = {b:.6g}"))
    return out


def emit_fiber(cfg: RunConfig) -> List[Path]:
    c = cfg.c if cfg.c is not None else 2.5
    curve = HC.fiber_curve(cfg.p, c, n=cfg.n or 256)
    d = _outdir(cfg)
    path = d / "fiber.csv"
    curve.write_csv(path)
    out = [path]
    if cfg.plot:
        from .plotting import plot_curve
        out.append(plot_curve(curve.samples, d / "fiber.png", f"fiber p={cfg.p}, c={c:.6g}"))
    return out


def emit_flow(cfg: RunConfig) -> List[Path]:
    c = cfg.c if cfg.c is not None else 2.2
    steps = cfg.n or 20000
    st = ORC.point_on_level(cfg.q, c, 0.7)
    tr = ORC.flow_integrate(st, c, cfg.dt, steps, record_every=max(1, steps // 2000))
    d = _outdir(cfg)
    path = d / "flow.csv"
    tr.write_csv(path, c)
    out = [path]
    if cfg.plot:
        from .plotting import plot_trajectory
        t = np.array([s.t for s in tr.states])
        z = np.array([s.state.as_tuple() for s in tr.states])
        kc = np.array([ORC.K_c(tuple(v), c) for v in z])
        out.append(plot_trajectory(t, z[:, :2], kc, d / "flow.png",
                                   f"K_c flow, c={c:.6g}, drift={tr.max_drift:.2e}"))
    if tr.collided:
        sys.stderr.write("flow: trajectory terminated at a collision\n")
    return out


def emit_disk(cfg: RunConfig) -> List[Path]:
    c = cfg.c if cfg.c is not None else HC.C0 + 0.01
    path = _outdir(cfg) / "disk.csv"
    n = cfg.n or 50
    ORC.write_disk_scan(path, cfg.q, c, ORC.DiskGrid(n, 4 * n, tuple(cfg.q), c))
    return [path]


def emit_graph(cfg: RunConfig, name: str) -> List[Path]:
    g = FIG.find_graph(name)
    if g is None:
        raise ConfigError(f"unknown graph {name!r}; known: {', '.join(sorted(FIG.graph_registry()))}")
    d = _outdir(cfg)
    path = d / f"graph_{name}.csv"
    if g.arity == 1:
        n = cfg.n or 2000
        x = np.linspace(*g.domain[0], n)
        y = np.asarray(g.func(x), dtype=float)
        out = [_write_csv(path, [*g.args, "value"], zip(x, y))]
        if cfg.plot:
            from .plotting import plot_graph_1d
            out.append(plot_graph_1d(x, y, d / f"graph_{name}.png", name, g.args[0]))
        return out
    n = cfg.n or (100 if g.arity == 2 else 20)
    axes = [np.linspace(lo, hi, n) for lo, hi in g.domain]
    mesh = np.meshgrid(*axes, indexing="ij")
    vals = np.asarray(g.func(*mesh), dtype=float)
    rows = zip(*[m.ravel() for m in mesh], vals.ravel())
    out = [_write_csv(path, [*g.args, "value"], rows)]
    if cfg.plot and g.arity == 2:
        from .plotting import plot_graph_2d
        out.append(plot_graph_2d(axes[0], axes[1], vals, d / f"graph_{name}.png", name, g.args))
    return out


def cmd_emit(cfg: RunConfig) -> int:
    t = cfg.target
    if t == "hill-region":
        files = emit_hill_region(cfg)
    elif t == "fiber":
        files = emit_fiber(cfg)
    elif t == "flow":
        files = emit_flow(cfg)
    elif t == "disk":
        files = emit_disk(cfg)
    elif t.startswith("graph:"):
        files = emit_graph(cfg, t.split(":", 1)[1])
    else:
        raise ConfigError(f"unknown emit target {t!r}")
    for f in files:
        print(f)
    return EXIT_PASS


def run(cfg: RunConfig) -> int:
    if cfg.command == "verify":
        return {"figures": cmd_verify_figures, "final": cmd_verify_final,
                "steps": cmd_verify_steps}[cfg.target](cfg)
    if cfg.command == "oracle":
        return cmd_oracle(cfg)
    return cmd_emit(cfg)


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_PASS
    try:
        cfg = RunConfig.from_namespace(ns)
        return run(cfg)
    except ConfigError as e:
        sys.stderr.write(f"configuration error: {e}\n")
        return EXIT_CONFIG
    except (HillError, ArithmeticError, ValueError) as e:
        sys.stderr.write(f"evaluation error: {e}\n")
        return EXIT_EVAL


if __name__ == "__main__":
    sys.exit(main())
