"""Render per-period metric figures next to the delimited report output."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

PIPELINE_LABELS = {
    "raw": "No mitigation",
    "roem": "ROEM",
    "pec_static": "Non-adaptive PEC",
    "pec_adaptive": "Adaptive PEC",
}
PIPELINE_COLORS = {
    "raw": "tab:gray",
    "roem": "tab:green",
    "pec_static": "tab:orange",
    "pec_adaptive": "tab:blue",
}


def _metric_figure(metrics: list[dict], key: str, ylabel: str, path: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    pipelines = []
    for row in metrics:
        if row["pipeline"] not in pipelines:
            pipelines.append(row["pipeline"])
    for name in pipelines:
        rows = [r for r in metrics if r["pipeline"] == name]
        periods = [r["period"] for r in rows]
        mean = [r[f"{key}_mean"] for r in rows]
        std = [r[f"{key}_std"] for r in rows]
        color = PIPELINE_COLORS.get(name)
        ax.plot(periods, mean, marker="o", ms=4, label=PIPELINE_LABELS.get(name, name), color=color)
        lo = [m - s for m, s in zip(mean, std)]
        hi = [m + s for m, s in zip(mean, std)]
        ax.fill_between(periods, lo, hi, alpha=0.15, color=color)
    ax.set_xlabel("time period")
    ax.set_ylabel(ylabel)
    ax.set_ylim(bottom=0)
    ax.legend(frameon=False)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_figures(metrics: list[dict], out_dir: str) -> dict[str, str]:
    """Accuracy and stability figures; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    acc_path = os.path.join(out_dir, "accuracy.png")
    _metric_figure(metrics, "eps_r", "register accuracy $\\epsilon_R$", acc_path)
    paths["accuracy_figure"] = acc_path
    stab_path = os.path.join(out_dir, "stability.png")
    _metric_figure(metrics, "s_r", "register stability $s_R$", stab_path)
    paths["stability_figure"] = stab_path
    return paths
