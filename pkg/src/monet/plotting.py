"""Figures for the ``analyze`` report. Always renders off-screen to files."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams.update({
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
})


def _by_label(runs):
    out = {}
    for r in runs:
        out.setdefault(r.label, []).append(r)
    return dict(sorted(out.items()))


def plot_learning_curves(runs, path) -> Path:
    """Mean fitness against evaluations, one line per algorithm with a ±1 std band."""
    fig, ax = plt.subplots(figsize=(4.5, 3.0))
    for label, group in _by_label(runs).items():
        # runs of one label share the checkpoint grid; truncate defensively
        k = min(len(r.checkpoints) for r in group)
        evals = group[0].checkpoints[:k, 0]
        curves = np.stack([r.checkpoints[:k, 1] for r in group])
        mean, std = curves.mean(axis=0), curves.std(axis=0)
        ax.plot(evals, mean, label=f"{label} (n={len(group)})", lw=1.2)
        ax.fill_between(evals, mean - std, mean + std, alpha=0.25, lw=0)
    ax.set_xlabel("evaluations")
    ax.set_ylabel("mean fitness")
    ax.set_title(runs[0].benchmark)
    ax.legend(frameon=False)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_final_boxes(runs, path) -> Path:
    groups = _by_label(runs)
    fig, (ax_f, ax_a) = plt.subplots(1, 2, figsize=(6.0, 2.8))
    labels = list(groups)
    ax_f.boxplot([[r.final for r in groups[k]] for k in labels])
    ax_f.set_xticks(range(1, len(labels) + 1), labels)
    ax_f.set_ylabel("final mean fitness")
    ax_a.boxplot([[r.auc for r in groups[k]] for k in labels])
    ax_a.set_xticks(range(1, len(labels) + 1), labels)
    ax_a.set_ylabel("AUC")
    fig.suptitle(runs[0].benchmark, fontsize=9)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
