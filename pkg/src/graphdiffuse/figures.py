"""File-based matplotlib rendering for reports and training runs.

Every function writes a PNG next to the delimited output it illustrates and
returns the path it wrote.  The Agg backend is forced so rendering works in
headless runs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import (
    MmdConfig,
    MmdReport,
    clustering_descriptor,
    degree_descriptor,
    spectrum_descriptor,
    orbit_descriptor,
)
from .orbits import ORBIT_NAMES

__all__ = [
    "save_loss_curve",
    "save_mmd_bars",
    "save_descriptor_overlay",
    "save_node_count_hist",
]


def save_loss_curve(losses, path, title: str = "training loss") -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(np.arange(1, len(losses) + 1), losses, lw=1.5)
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean loss")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def save_mmd_bars(report: MmdReport, path) -> str:
    names = [name for name, _ in report.rows()]
    values = [value for _, value in report.rows()]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(names, values, color="#4878a8")
    ax.set_ylabel("MMD")
    ax.set_title(f"generated ({report.n_generated}) vs "
                 f"reference ({report.n_reference})")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def _mean_padded(vecs):
    width = max(v.shape[0] for v in vecs)
    out = np.zeros((len(vecs), width))
    for k, v in enumerate(vecs):
        out[k, : v.shape[0]] = v
    return out.mean(axis=0)


def save_descriptor_overlay(reference, generated, path,
                            config: MmdConfig = MmdConfig()) -> str:
    """2x2 grid of mean descriptors for the two graph sets."""
    fig, axes = plt.subplots(2, 2, figsize=(10, 7))

    ax = axes[0, 0]
    for graphs, label in ((reference, "reference"), (generated, "generated")):
        mean = _mean_padded([degree_descriptor(g) for g in graphs])
        ax.plot(np.arange(mean.shape[0]), mean, label=label, lw=1.5)
    ax.set_title("degree distribution")
    ax.set_xlabel("degree")
    ax.legend()

    ax = axes[0, 1]
    centers = (np.arange(config.clustering_bins) + 0.5) / config.clustering_bins
    for graphs, label in ((reference, "reference"), (generated, "generated")):
        mean = _mean_padded(
            [clustering_descriptor(g, config.clustering_bins) for g in graphs])
        ax.plot(centers, mean, label=label, lw=1.0)
    ax.set_title("local clustering")
    ax.set_xlabel("coefficient")
    ax.legend()

    ax = axes[1, 0]
    centers = 2.0 * (np.arange(config.spectrum_bins) + 0.5) / config.spectrum_bins
    for graphs, label in ((reference, "reference"), (generated, "generated")):
        mean = _mean_padded(
            [spectrum_descriptor(g, config.spectrum_bins) for g in graphs])
        ax.plot(centers, mean, label=label, lw=1.0)
    ax.set_title("Laplacian spectrum")
    ax.set_xlabel("eigenvalue")
    ax.legend()

    ax = axes[1, 1]
    x = np.arange(len(ORBIT_NAMES))
    width = 0.4
    ref_mean = _mean_padded([orbit_descriptor(g) for g in reference])
    gen_mean = _mean_padded([orbit_descriptor(g) for g in generated])
    ax.bar(x - width / 2, ref_mean, width, label="reference")
    ax.bar(x + width / 2, gen_mean, width, label="generated")
    ax.set_xticks(x)
    ax.set_xticklabels(ORBIT_NAMES, rotation=60, ha="right", fontsize=7)
    ax.set_title("orbit profile")
    ax.legend()

    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def save_node_count_hist(corpus, path) -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    for split_name in ("train", "val", "test"):
        sizes = [g.n_nodes for g in corpus.graphs(split_name)]
        if sizes:
            ax.hist(sizes, bins=20, alpha=0.5, label=split_name)
    ax.set_xlabel("nodes per graph")
    ax.set_ylabel("count")
    ax.set_title("corpus size distribution")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)
