"""Report writers: CSV emission and matplotlib figures rendered to files.

Figures land in a figures/ directory next to the delimited output so a
stats or ablation run leaves both machine-readable tables and plots.
"""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .dataset import PLATFORMS

_LABEL_COLORS = {"fake": "#c44e52", "true": "#55a868"}


def write_stats_csv(report: dict, path) -> None:
    """Flatten the per-platform stats matrix into one CSV table."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            [
                "platform",
                "label_filter",
                "graph_count",
                "total_nodes",
                "max_tree_width",
                "avg_nodes_per_graph",
            ]
        )
        for platform, by_filter in report["platforms"].items():
            for label_filter, stats in by_filter.items():
                if stats is None:
                    continue
                writer.writerow(
                    [
                        platform,
                        label_filter,
                        stats["graph_count"],
                        stats["total_nodes"],
                        stats["max_tree_width"],
                        f"{stats['avg_nodes_per_graph']:.4f}",
                    ]
                )


def write_ablation_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["variant", "accuracy", "precision", "recall", "f1"])
        for row in rows:
            m = row.metrics
            writer.writerow(
                [
                    row.variant,
                    f"{m.accuracy:.4f}",
                    f"{m.precision:.4f}",
                    f"{m.recall:.4f}",
                    f"{m.f1:.4f}",
                ]
            )


def _grouped_bars(ax, section: dict, value_key: str, title: str, ylabel: str):
    platforms = [p for p in PLATFORMS if p in section]
    width = 0.35
    for offset, label in ((-width / 2, "fake"), (width / 2, "true")):
        values = []
        for platform in platforms:
            stats = section[platform].get(label)
            values.append(stats[value_key] if stats else 0.0)
        positions = [i + offset for i in range(len(platforms))]
        ax.bar(positions, values, width, label=label, color=_LABEL_COLORS[label])
    ax.set_xticks(range(len(platforms)))
    ax.set_xticklabels(platforms)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend()


def render_stats_figures(report: dict, directory) -> list[str]:
    """Render overlap, comment-length, and similarity figures as PNGs."""
    os.makedirs(directory, exist_ok=True)
    written = []

    fig, ax = plt.subplots(figsize=(5, 3.2))
    overlap = report["overlap"]
    platform_counts = ["1", "2", "3"]
    width = 0.35
    for offset, label in ((-width / 2, "fake"), (width / 2, "true")):
        values = [overlap[label]["proportions"].get(k, 0.0) for k in platform_counts]
        positions = [i + offset for i in range(len(platform_counts))]
        ax.bar(positions, values, width, label=label, color=_LABEL_COLORS[label])
    ax.set_xticks(range(len(platform_counts)))
    ax.set_xticklabels([f"{k} platform(s)" for k in platform_counts])
    ax.set_ylabel("proportion of claims")
    ax.set_title("Cross-platform spread by label")
    ax.legend()
    path = os.path.join(directory, "overlap.png")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(5, 3.2))
    _grouped_bars(
        ax, report["comment_length"], "mean", "Mean comment length", "tokens"
    )
    path = os.path.join(directory, "comment_length.png")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    if "similarity" in report:
        fig, ax = plt.subplots(figsize=(5, 3.2))
        _grouped_bars(
            ax,
            report["similarity"],
            "mean",
            "Comment-claim similarity",
            "mean cosine",
        )
        path = os.path.join(directory, "similarity.png")
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


def render_ablation_figure(rows, path) -> str:
    fig, ax = plt.subplots(figsize=(7, 3.6))
    names = [row.variant for row in rows]
    scores = [row.metrics.f1 for row in rows]
    ax.bar(range(len(names)), scores, color="#4c72b0")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=40, ha="right", fontsize=8)
    ax.set_ylabel("test F1")
    ax.set_title("Ablation variants")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_history_figure(history, path) -> str:
    fig, (ax_loss, ax_f1) = plt.subplots(1, 2, figsize=(8, 3.2))
    epochs = [r.epoch for r in history]
    ax_loss.plot(epochs, [r.l_pred for r in history], label="prediction")
    ax_loss.plot(epochs, [r.l_pcl for r in history], label="contrastive")
    ax_loss.plot(epochs, [r.l_final for r in history], label="total")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("train loss")
    ax_loss.legend(fontsize=8)
    ax_f1.plot(epochs, [r.val_metrics.f1 for r in history], color="#4c72b0")
    ax_f1.set_xlabel("epoch")
    ax_f1.set_ylabel("validation F1")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
