"""Figure rendering for benchmark outputs.

All functions draw to files with the Agg backend so they work headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import AblationRow, BenchmarkResult, CalibrationBin, DepthSweepResult

__all__ = [
    "render_ablation_figure",
    "render_bias_figure",
    "render_calibration_figure",
    "render_depth_figure",
]


def render_bias_figure(result: BenchmarkResult, path) -> None:
    """Boxplot of per-replication bias for every method in the run."""
    methods = result.methods()
    data = [result.biases(m) for m in methods]
    fig, ax = plt.subplots(figsize=(1.8 * max(len(methods), 3), 4.2))
    ax.boxplot(data, tick_labels=methods)
    ax.axhline(0.0, color="gray", linewidth=0.8, linestyle="--")
    ax.set_ylabel("bias")
    ax.set_title("Estimation bias by method")
    ax.tick_params(axis="x", rotation=20)
    fig.tight_layout()
    fig.savefig(Path(path), dpi=150)
    plt.close(fig)


def render_depth_figure(result: DepthSweepResult, path) -> None:
    """Two panels: bias spread per depth cap and residual imbalance per feature."""
    depths = sorted({r.depth for r in result.bias_rows})
    fig, (ax_bias, ax_asmd) = plt.subplots(1, 2, figsize=(10, 4.2))
    ax_bias.boxplot(
        [result.biases(d) for d in depths], tick_labels=[str(d) for d in depths]
    )
    ax_bias.axhline(0.0, color="gray", linewidth=0.8, linestyle="--")
    ax_bias.set_xlabel("maximum depth")
    ax_bias.set_ylabel("bias")
    ax_bias.set_title("Bias by depth cap")
    features = sorted({r.feature for r in result.asmd_rows})
    for feature in features:
        pairs = sorted(
            (r.depth, r.weighted_asmd)
            for r in result.asmd_rows
            if r.feature == feature
        )
        ax_asmd.plot(
            [d for d, _ in pairs], [v for _, v in pairs], marker="o", label=feature
        )
    ax_asmd.set_xlabel("maximum depth")
    ax_asmd.set_ylabel("weighted ASMD")
    ax_asmd.set_title("Residual imbalance by depth cap")
    if features:
        ax_asmd.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(Path(path), dpi=150)
    plt.close(fig)


def render_ablation_figure(rows: list[AblationRow], path) -> None:
    """Side-by-side boxplots of bias and peak imbalance per selection mode."""
    modes: list[str] = []
    for row in rows:
        if row.mode not in modes:
            modes.append(row.mode)

    def collect(attr: str, mode: str) -> np.ndarray:
        vals = np.array(
            [getattr(r, attr) for r in rows if r.mode == mode], dtype=np.float64
        )
        return vals[~np.isnan(vals)]

    fig, (ax_bias, ax_asmd) = plt.subplots(1, 2, figsize=(9, 4.2))
    ax_bias.boxplot([collect("bias", m) for m in modes], tick_labels=modes)
    ax_bias.axhline(0.0, color="gray", linewidth=0.8, linestyle="--")
    ax_bias.set_ylabel("bias")
    ax_bias.set_title("Bias by feature selection")
    ax_asmd.boxplot([collect("max_weighted_asmd", m) for m in modes], tick_labels=modes)
    ax_asmd.set_ylabel("max weighted ASMD")
    ax_asmd.set_title("Peak residual imbalance")
    fig.tight_layout()
    fig.savefig(Path(path), dpi=150)
    plt.close(fig)


def render_calibration_figure(bins: list[CalibrationBin], path) -> None:
    """Reliability plot of predicted against observed treatment rates."""
    fig, ax = plt.subplots(figsize=(4.8, 4.6))
    ax.plot([0, 1], [0, 1], color="gray", linewidth=0.8, linestyle="--")
    ax.plot(
        [b.mean_predicted for b in bins],
        [b.mean_observed for b in bins],
        marker="o",
    )
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xlabel("mean predicted propensity")
    ax.set_ylabel("observed treated fraction")
    ax.set_title("Propensity calibration")
    fig.tight_layout()
    fig.savefig(Path(path), dpi=150)
    plt.close(fig)
