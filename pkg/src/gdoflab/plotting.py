"""Figure helpers for the CLI reports.

Figures are written with the Agg backend. SVG output is made reproducible
by fixing the hash salt used for element ids and dropping the date stamp.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "grid.linestyle": "--",
    "lines.linewidth": 1.4,
    "svg.hashsalt": "gdoflab",
    "svg.fonttype": "path",
}


def _figure(width=4.5, height=3.2):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(width, height))
    return fig, ax


def save_figure(fig, path) -> None:
    """Write ``fig`` to ``path``; format follows the extension (svg default)."""
    ext = os.path.splitext(str(path))[1].lower().lstrip(".") or "svg"
    meta = {"Date": None} if ext == "svg" else {}
    if ext == "png":
        meta = {"Software": None}
    with plt.rc_context(STYLE):
        fig.savefig(path, format=ext, metadata=meta, bbox_inches="tight")
    plt.close(fig)


def plot_curves(alpha, d_finite, d_perfect, k_users, path) -> None:
    with plt.rc_context(STYLE):
        fig, ax = _figure()
        ax.plot(alpha, d_perfect, color="0.45", linestyle="--", label="perfect CSIT")
        ax.plot(alpha, d_finite, color="C0", label=f"finite precision CSIT, K={k_users}")
        ax.set_xlabel(r"$\alpha$")
        ax.set_ylabel(r"$d(\alpha)$")
        ax.set_ylim(0, 1.05)
        ax.set_xlim(min(alpha), max(alpha))
        ax.legend(loc="lower right")
    save_figure(fig, path)


def plot_convergence(p_exponents, mean, std, d_target, path) -> None:
    with plt.rc_context(STYLE):
        fig, ax = _figure()
        ax.errorbar(p_exponents, mean, yerr=std, marker="o", capsize=3, label="simulated")
        ax.axhline(d_target, color="k", linestyle=":", label=r"$d(\alpha)$")
        ax.set_xlabel(r"$\log_{10} P$")
        ax.set_ylabel("normalized rate per user")
        ax.set_ylim(0, 1.05)
        ax.legend(loc="lower right")
    save_figure(fig, path)


def plot_slopes(log2_pbar, series: dict, path, ylabel="bits") -> None:
    """Each entry of ``series`` is ``label -> (values, fitted_slope)``."""
    x = np.asarray(log2_pbar, dtype=float)
    with plt.rc_context(STYLE):
        fig, ax = _figure()
        for i, (label, (values, slope)) in enumerate(series.items()):
            y = np.asarray(values, dtype=float)
            ax.plot(x, y, marker="o", linestyle="none", color=f"C{i}")
            fit = y.mean() + slope * (x - x.mean())
            ax.plot(x, fit, color=f"C{i}", label=f"{label} (slope {slope:.3f})")
        ax.set_xlabel(r"$\log_2 \bar{P}$")
        ax.set_ylabel(ylabel)
        ax.legend(loc="best")
    save_figure(fig, path)
