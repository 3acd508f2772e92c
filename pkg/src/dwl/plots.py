"""Figure rendering for experiment reports and solver output.

All functions save PNG files and return the paths; nothing is shown
interactively.
"""

from __future__ import annotations

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def render_report_figures(report, outdir) -> list:
    """Decay series with its guaranteed envelope, plus the W trace."""
    written = []
    t = np.asarray(report.series.get("t", []))
    if t.size == 0:
        return written
    d = np.asarray(report.series["d"])
    env = report.envelope

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.semilogy(t, np.maximum(d, 1e-300), label="d(t)")
    for key in sorted(report.series):
        if key.startswith("d#"):
            ax.semilogy(t, np.maximum(report.series[key], 1e-300),
                        alpha=0.6, label=key.replace("#", " #"))
    t0 = report.config_echo.get("t0", 0.0)
    if env.get("kind") == "exponential":
        bound = env["D"] * d[0] * np.exp(-env["C"] * (t - t0))
        ax.semilogy(t, bound, "k--", label="D e^{-C(t-t0)} d(t0)")
        bound_h = env["D"] * d[0] * np.exp(-0.5 * env["C"] * (t - t0))
        ax.semilogy(t, bound_h, "k:", label="rate C/2")
    elif env.get("kind") == "power":
        Tt = env.get("T_tilde", 0.0)
        expo = (1.0 + env["tau"]) / (1.0 - env["tau"])
        rel = t - t0 - Tt
        mask = rel > 0
        bound = np.sqrt(1.0 / (env["k1p_sq"]
                               * (env["E"] * rel[mask]) ** expo))
        ax.semilogy(t[mask], bound, "k--", label="power envelope")
    ax.set_xlabel("t")
    ax.set_ylabel("distance")
    ax.legend(fontsize=8)
    ax.set_title("decay of d(t) against the guaranteed envelope")
    path = os.path.join(outdir, "decay.png")
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    if "W" in report.series:
        fig, ax = plt.subplots(figsize=(7, 4.5))
        ax.plot(t, report.series["W"], label="W(t)")
        if "V" in report.series:
            ax.plot(t, report.series["V"], label="V(t)", alpha=0.7)
        ax.set_xlabel("t")
        ax.set_ylabel("functional value")
        ax.legend(fontsize=8)
        ax.set_title("Lyapunov functionals along the run")
        path = os.path.join(outdir, "functionals.png")
        fig.savefig(path, dpi=130, bbox_inches="tight")
        plt.close(fig)
        written.append(path)
    return written


def render_solution_heatmap(gf, outdir, name: str = "solution.png") -> str:
    """Space-time heatmap of a solved grid function."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    im = ax.imshow(gf.values, origin="lower", aspect="auto",
                   extent=[gf.t0, gf.t0 + (gf.nt - 1) * gf.dt, 0.0, 1.0])
    fig.colorbar(im, ax=ax, label="u(x,t)")
    ax.set_xlabel("t")
    ax.set_ylabel("x")
    ax.set_title("solution u(x,t)")
    path = os.path.join(outdir, name)
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    return path
