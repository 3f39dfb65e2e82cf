"""PNG figures for the CLI's --plot option (Agg backend, no display needed)."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    _pyplot().close(fig)
    return Path(path)


def lyapunov_figure(k, L, omega: float, structure, path) -> Path:
    """L(k) with the levels +-1 and +-cos(omega); bands shaded."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(k, L, lw=1.2, color="k")
    for level, style in ((1, "-"), (-1, "-"), (np.cos(omega), "--"), (-np.cos(omega), "--")):
        ax.axhline(level, ls=style, lw=0.8, color="tab:blue" if abs(level) == 1 else "tab:red")
    for lo, hi in structure.bands:
        ax.axvspan(lo, hi, color="0.9", zorder=0)
    ax.scatter([c.k for c in structure.criticals],
               [np.cos(omega) if c.tag.value == "PlusCos" else -np.cos(omega) for c in structure.criticals],
               s=12, color="tab:red", zorder=3)
    ax.set_ylim(-3, max(3.0, float(np.nanmax(L[1:])) if len(L) > 1 else 3.0))
    ax.set_xlabel("k")
    ax.set_ylabel("L(k)")
    return _save(fig, path)


def growth_figure(trace, fit, path, gamma: float = 1.0, label: str = "") -> Path:
    from .asymptotics import _abscissa

    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    x = _abscissa(fit.abscissa, gamma, trace.n)
    ax.plot(x, trace.logmag, lw=0.8, label="log |u_n|")
    lo, hi = fit.window
    xs = x[lo - 1:hi]
    ax.plot(xs, fit.intercept + fit.slope * xs, "r--", lw=1, label=f"slope {fit.slope:.4g}")
    ax.set_xlabel(fit.abscissa)
    ax.set_ylabel("log |u_n|")
    ax.legend()
    if label:
        ax.set_title(label)
    return _save(fig, path)


def gapscan_figure(result, path) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for j, N in enumerate(result.section_sizes):
        ax.semilogy(result.lambdas, result.distances[:, j], marker=".", lw=0.8, label=f"N={N}")
    ax.axhline(result.threshold, color="k", ls=":", lw=0.8)
    ax.set_xlabel("lambda")
    ax.set_ylabel("min |eig(B - M)|")
    ax.legend()
    return _save(fig, path)


def remainder_figure(report, path) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    positive = report.norms > 0
    if np.any(positive):
        ax.loglog(report.n[positive], report.norms[positive], lw=0.6)
    ax.set_xlabel("n")
    ax.set_ylabel("||R_n||")
    return _save(fig, path)


def tail_sums_figure(reports, path) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for rep in reports:
        if rep.tail_partial_sums:
            M, s = zip(*rep.tail_partial_sums)
            ax.semilogx(M, s, marker=".", label=f"k={rep.k:.4f}")
    ax.set_xlabel("M")
    ax.set_ylabel("log sum |xi_n|^2, n <= M")
    if reports:
        ax.legend(fontsize="small")
    return _save(fig, path)
