"""Figure rendering for sweep reports (negativity-vs-W curves)."""
from __future__ import annotations

import numpy as np

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

_LINE = {1: "C0", 2: "C1", 3: "C2"}


def negativity_figure(points, ell: int, w_convention: str):
    """Single-ell figure: Monte Carlo points with error bars over model curves."""
    pts = [p for p in points if p.ell == ell]
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    w = np.array([p.w for p in pts])
    ax.errorbar(w, [p.negativity_mc for p in pts],
                yerr=[p.negativity_err for p in pts],
                fmt="o", ms=4, capsize=3, color=_LINE.get(ell, "C0"),
                label="Monte Carlo (screen ensemble)")
    ax.plot(w, [p.negativity_analytic for p in pts], "-",
            color="k", lw=1.2, label="quadratic model (generating function)")
    ax.plot(w, [p.negativity_closed_form for p in pts], "--",
            color="0.5", lw=1.2, label="closed form")
    ax.set_xlabel(rf"scintillation strength $W$ ({w_convention.replace('_', ' ')})")
    ax.set_ylabel("negativity")
    ax.set_title(rf"$\ell = {ell}$")
    ax.set_ylim(bottom=0.0)
    ax.grid(alpha=0.3)
    ax.legend(frameon=False, fontsize=9)
    fig.tight_layout()
    return fig


def overlay_figure(points, w_convention: str):
    """All-ell overlay of the analytic negativity curves (with MC points)."""
    ells = sorted({p.ell for p in points})
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for ell in ells:
        pts = [p for p in points if p.ell == ell]
        w = np.array([p.w for p in pts])
        color = _LINE.get(ell, None)
        ax.plot(w, [p.negativity_analytic for p in pts], "-", color=color,
                lw=1.4, label=rf"$\ell = {ell}$ (quadratic model)")
        ax.plot(w, [p.negativity_mc for p in pts], "o", ms=3.5, color=color)
    ax.set_xlabel(rf"scintillation strength $W$ ({w_convention.replace('_', ' ')})")
    ax.set_ylabel("negativity")
    ax.set_ylim(bottom=0.0)
    ax.grid(alpha=0.3)
    ax.legend(frameon=False, fontsize=9)
    fig.tight_layout()
    return fig


def save_figure(fig, path) -> None:
    fig.savefig(path)
    plt.close(fig)
