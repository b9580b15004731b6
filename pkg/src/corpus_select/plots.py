"""Render comparison figures to files (headless backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluate import Comparison


def _bar(ax, names: list[str], values: list[float], title: str, ylabel: str) -> None:
    ax.bar(range(len(names)), values, color="#4878a8")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_title(title)
    ax.set_ylabel(ylabel)
    ax.grid(axis="y", alpha=0.3)


def save_comparison_figures(
    comparison: Comparison, out_dir: str | Path, stem: str = "comparison"
) -> list[Path]:
    """Write coverage/perplexity bar charts and the overlap heatmap as PNGs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = [row.strategy for row in comparison.rows]
    written: list[Path] = []

    fig, ax = plt.subplots(figsize=(7, 4), constrained_layout=True)
    _bar(
        ax,
        names,
        [row.coverage for row in comparison.rows],
        "In-domain bigram coverage of selection",
        "coverage",
    )
    path = out_dir / f"{stem}_coverage.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(7, 4), constrained_layout=True)
    _bar(
        ax,
        names,
        [row.mean_ppl for row in comparison.rows],
        "Mean in-domain perplexity of selection",
        "perplexity",
    )
    path = out_dir / f"{stem}_perplexity.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6, 5), constrained_layout=True)
    matrix = np.asarray(comparison.overlap)
    image = ax.imshow(matrix, vmin=0.0, vmax=1.0, cmap="viridis")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=45, ha="right")
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names)
    ax.set_title("Selection overlap (Jaccard)")
    fig.colorbar(image, ax=ax, shrink=0.8)
    path = out_dir / f"{stem}_overlap.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written
