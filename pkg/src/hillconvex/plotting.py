"""PNG renderings of emitted data (non-interactive backend)."""
from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=110, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_graph_1d(x, y, path, name: str, xlabel: str = "x") -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(x, y, lw=1.2)
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.set_xlabel(xlabel)
    ax.set_title(name)
    return _save(fig, path)


def plot_graph_2d(a, b, z, path, name: str, labels: Sequence[str] = ("x", "k")) -> Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    im = ax.pcolormesh(a, b, z.T, shading="auto", cmap="viridis")
    if np.nanmin(z) < 0 < np.nanmax(z):
        ax.contour(a, b, z.T, levels=[0.0], colors="w", linewidths=0.8)
    fig.colorbar(im, ax=ax)
    ax.set_xlabel(labels[0])
    ax.set_ylabel(labels[1])
    ax.set_title(name)
    return _save(fig, path)


def plot_curve(pts, path, title: str, origin: bool = True,
               extra: Optional[np.ndarray] = None) -> Path:
    pts = np.asarray(pts)
    closed = np.vstack([pts, pts[:1]])
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.plot(closed[:, 0], closed[:, 1], lw=1.2)
    if extra is not None:
        ax.plot(extra[:, 0], extra[:, 1], lw=0.8, color="C1")
    if origin:
        ax.plot([0], [0], "k+")
    ax.set_aspect("equal")
    ax.set_xlabel("q1")
    ax.set_ylabel("q2")
    ax.set_title(title)
    return _save(fig, path)


def plot_trajectory(t, q, kc, path, title: str) -> Path:
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 4))
    a1.plot(q[:, 0], q[:, 1], lw=0.8)
    a1.set_aspect("equal")
    a1.set_xlabel("q1")
    a1.set_ylabel("q2")
    a2.plot(t, kc, lw=0.8)
    a2.set_xlabel("t")
    a2.set_ylabel("K_c")
    fig.suptitle(title)
    return _save(fig, path)


def plot_certificates(ids, margins, path, title: str) -> Path:
    fig, ax = plt.subplots(figsize=(7, 3.5))
    m = np.asarray(margins, dtype=float)
    ax.bar(range(len(ids)), m, color=["C2" if v > 0 else "C3" for v in m])
    ax.set_xticks(range(len(ids)))
    ax.set_xticklabels(ids, rotation=60, fontsize=8)
    ax.set_yscale("symlog", linthresh=1e-2)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_ylabel("margin")
    ax.set_title(title)
    return _save(fig, path)
