"""Figures for the ``report`` subcommand (Agg backend, PNG without metadata)."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.figsize": (5.0, 3.4),
    "figure.dpi": 100,
    "savefig.dpi": 100,
}


def _save(fig, path: Path) -> Path:
    # no Software/date chunks, so reruns give identical bytes
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)
    return path


def tradeoff_figure(points, path: Path, rate_bounds=None, fitted_rate=None) -> Path:
    """Exact worst-case error against cost on log-log axes."""
    costs_n = np.array([p.cost_nss for p in points])
    costs_u = np.array([p.cost_unrestricted for p in points])
    errs = np.array([p.exact_error for p in points])
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.step(costs_n, errs, where="post", marker="o", ms=3, label="NSS cost")
        ax.step(costs_u, errs, where="post", marker="s", ms=3, ls="--",
                label="unrestricted cost")
        if rate_bounds is not None and len(points):
            x0, y0 = costs_n[0], errs[0]
            xs = np.array([costs_n.min(), costs_n.max()])
            ax.plot(xs, y0 * (xs / x0) ** (-rate_bounds.lower), ":", color="k",
                    label=f"slope -{rate_bounds.lower:.3g} (theory)")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("cost")
        ax.set_ylabel("worst-case error")
        title = "error vs cost"
        if fitted_rate is not None:
            title += f" (fitted rate {fitted_rate:.3f})"
        ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        return _save(fig, path)


def level_counts_figure(level_counts: dict, eps: float, path: Path) -> Path:
    ks = sorted(level_counts)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.bar(ks, [level_counts[k] for k in ks], width=0.8)
        ax.set_yscale("log")
        ax.set_xlabel("level k (max coordinate)")
        ax.set_ylabel("terms at level k")
        ax.set_title(f"active set by level, eps = {eps:.3g}")
        fig.tight_layout()
        return _save(fig, path)


def witness_figure(budgets: Sequence[float], lower_bounds: Sequence[float], path: Path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.loglog(budgets, lower_bounds, marker="o", ms=3)
        ax.set_xlabel("budget N")
        ax.set_ylabel("error lower bound")
        ax.set_title("witness lower bound")
        fig.tight_layout()
        return _save(fig, path)
