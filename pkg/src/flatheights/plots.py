"""Figure rendering for scenario reports.

Figures are drawn with matplotlib on the Agg backend and written as SVG next
to the delimited output.  matplotlib is imported lazily so that report runs
without --plot never pay for it.
"""

from __future__ import annotations

import math
import os


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "flatheights"
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path: str) -> str:
    fig.savefig(path, bbox_inches="tight", metadata={"Date": None})
    import matplotlib.pyplot as plt

    plt.close(fig)
    return path


def theta_sweep_figure(thetas, ratios, inv_ratios, theta_star, out_dir: str) -> str:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(thetas, ratios, label="ratio", lw=1.2)
    ax.plot(thetas, inv_ratios, label="1 / ratio", lw=1.2, ls="--")
    if theta_star is not None:
        ax.axvline(theta_star, color="k", lw=0.8, alpha=0.6)
        ax.annotate("theta*", (theta_star, ax.get_ylim()[1]), fontsize=8,
                    ha="left", va="top")
    ax.set_xlim(0.0, 2.0 * math.pi)
    ax.set_xlabel("theta")
    ax.set_ylabel("norm ratio")
    ax.legend(frameon=False, fontsize=8)
    ax.grid(alpha=0.3, lw=0.4)
    return _save(fig, os.path.join(out_dir, "theta_sweep.svg"))


def gap_figure(ns, gaps, out_dir: str, filename: str = "gaps.svg",
               ylabel: str = "gap") -> str:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(ns, gaps, marker="o", ms=2.5, lw=1.0)
    ax.set_xlabel("N")
    ax.set_ylabel(ylabel)
    if all(g > 0 for g in gaps):
        ax.set_yscale("log")
    ax.grid(alpha=0.3, lw=0.4)
    return _save(fig, os.path.join(out_dir, filename))


def path_figure(report, out_dir: str) -> str:
    """t vs h (with the derivative pair) and t vs A (with its ceiling)."""
    plt = _plt()
    panels = int(report.h is not None) + int(report.a_vals is not None)
    fig, axes = plt.subplots(1, max(panels, 1), figsize=(5.4 * max(panels, 1), 3.6),
                             squeeze=False)
    col = 0
    if report.h is not None:
        ax = axes[0][col]
        ax.plot(report.t_grid, report.h, lw=1.2, label="h(t)")
        if report.h_prime_numeric is not None:
            ts = [t for t, v in zip(report.t_grid, report.h_prime_numeric) if v is not None]
            vs = [v for v in report.h_prime_numeric if v is not None]
            ax.plot(ts, vs, lw=1.0, ls="--", label="h'(t) numeric")
        ax.set_xlabel("t")
        ax.legend(frameon=False, fontsize=8)
        ax.grid(alpha=0.3, lw=0.4)
        col += 1
    if report.a_vals is not None:
        ax = axes[0][col]
        ax.plot(report.t_grid, report.a_vals, lw=1.2, marker="o", ms=2.5, label="A(t)")
        if report.bounds is not None:
            ax.plot(report.t_grid, report.bounds, lw=0.9, ls=":", label="ceiling")
        ax.set_xlabel("t")
        ax.legend(frameon=False, fontsize=8)
        ax.grid(alpha=0.3, lw=0.4)
    return _save(fig, os.path.join(out_dir, "path.svg"))


def form_figure(form, out_dir: str) -> str:
    plt = _plt()
    fig, axes = plt.subplots(1, 2, figsize=(8.0, 3.4))
    for ax, comp, name in ((axes[0], form.P, "P"), (axes[1], form.Q, "Q")):
        im = ax.pcolormesh(comp.T, shading="auto")
        ax.set_title(f"{name} coefficients", fontsize=9)
        ax.set_xlabel("i (x)")
        ax.set_ylabel("j (y)")
        fig.colorbar(im, ax=ax, shrink=0.85)
    return _save(fig, os.path.join(out_dir, "form.svg"))
