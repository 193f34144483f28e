"""Figure rendering for the report and bench paths.

All functions write a PNG next to the delimited output and return the path.
The Agg backend is forced so rendering works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .graph import MetricMatrix


def plot_metric_diagonal(metric: MetricMatrix, threshold_fraction: float, path):
    """Stem plot of diagonal importances with the threshold as a red line."""
    diag = np.diag(metric.entries)
    fig, ax = plt.subplots(figsize=(7, 3.2))
    ax.stem(np.arange(len(diag)), diag, basefmt=" ")
    peak = diag.max() if len(diag) else 0.0
    if peak > 0:
        ax.axhline(threshold_fraction * peak, color="red", lw=1,
                   label=f"{threshold_fraction:.0%} of max")
        ax.legend(loc="upper right", fontsize=8)
    ax.set_xlabel("feature index")
    ax.set_ylabel("diagonal entry")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_metric_heatmap(metric: MetricMatrix, threshold_fraction: float, path):
    """|M| heatmap; entries above the threshold fraction of the max get red dots."""
    m = np.abs(metric.entries)
    fig, ax = plt.subplots(figsize=(4.8, 4.2))
    im = ax.imshow(m, cmap="viridis")
    peak = m.max()
    if peak > 0:
        big = np.argwhere(m >= threshold_fraction * peak)
        ax.scatter(big[:, 1], big[:, 0], s=8, color="red", marker="o")
    fig.colorbar(im, ax=ax, shrink=0.85)
    ax.set_xlabel("feature j")
    ax.set_ylabel("feature i")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_bench_curves(summaries, path, y_key="accuracy_mean", y_label="validation accuracy"):
    """One curve per (objective, topology) over n_train."""
    groups = {}
    for s in summaries:
        parts = s["setting"].rsplit("/", 1)[0]
        groups.setdefault(parts, []).append(s)
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, rows in sorted(groups.items()):
        rows = sorted(rows, key=lambda r: r["n_train"])
        x = [r["n_train"] for r in rows]
        y = [r[y_key] for r in rows]
        ax.plot(x, y, marker="o", label=name)
    ax.set_xlabel("training set size")
    ax.set_ylabel(y_label)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
