"""Synthetic small-world corpora with property-graded prompts.

The generator is the classic ring-lattice-plus-rewiring construction.  Each
node starts connected to its k nearest ring neighbors; every lattice edge
then has its far endpoint redirected with probability p to a uniformly
chosen non-neighbor.  Redirection never adds or removes edges, so the edge
count stays n*k/2 exactly, and with p = 0 every node's local clustering is
3(k-2)/(4(k-1)).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, split
from .graphs import CategorySpace, Graph, graph_from_categories, graph_stats
from .rng import as_generator, child_seed
from .text import render_property_prompt

__all__ = [
    "WsSpec",
    "watts_strogatz",
    "er_graph",
    "CLUSTERING_THRESHOLDS",
    "DEGREE_THRESHOLDS",
    "SWEEP_NODE_RANGE",
    "property_group",
    "build_property_corpus",
]

log = logging.getLogger(__name__)

# group boundaries for the graded corpora: low < first <= medium < second <= high
CLUSTERING_THRESHOLDS = (0.15, 0.40)
DEGREE_THRESHOLDS = (12.0, 40.0)

SWEEP_NODE_RANGE = (10, 110)
_MIN_NEIGHBORS = 6


@dataclass(frozen=True)
class WsSpec:
    """Ring size, even neighbor count and rewiring probability."""

    n_nodes: int
    n_neighbors: int
    rewire_prob: float

    def __post_init__(self) -> None:
        if self.n_nodes < 3:
            raise ValueError(f"need at least 3 nodes, got {self.n_nodes}")
        if self.n_neighbors % 2 != 0:
            raise ValueError(f"n_neighbors must be even, got {self.n_neighbors}")
        if not (2 <= self.n_neighbors < self.n_nodes):
            raise ValueError(
                f"n_neighbors must satisfy 2 <= k < n, got k={self.n_neighbors} "
                f"n={self.n_nodes}")
        if not (0.0 <= self.rewire_prob <= 1.0):
            raise ValueError(f"rewire_prob must be in [0, 1], got {self.rewire_prob}")


def watts_strogatz(spec: WsSpec, rng: np.random.Generator | int) -> Graph:
    """Small-world graph on the default structure-only category space."""
    rng = as_generator(rng)
    n, k, p = spec.n_nodes, spec.n_neighbors, spec.rewire_prob
    adj = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for step in range(1, k // 2 + 1):
            j = (i + step) % n
            adj[i, j] = adj[j, i] = True
    if p > 0:
        for i in range(n):
            for step in range(1, k // 2 + 1):
                j = (i + step) % n
                if rng.random() >= p:
                    continue
                # move the far endpoint somewhere i is not already linked
                candidates = np.flatnonzero(~adj[i])
                candidates = candidates[candidates != i]
                if candidates.size == 0 or not adj[i, j]:
                    continue
                target = int(candidates[int(rng.integers(candidates.size))])
                adj[i, j] = adj[j, i] = False
                adj[i, target] = adj[target, i] = True
    pair = adj.astype(np.int64)
    return graph_from_categories(np.zeros(n, dtype=np.int64), pair, CategorySpace())


def er_graph(n: int, edge_prob: float, rng: np.random.Generator | int) -> Graph:
    """Independent-edge random graph, used only as an evaluation baseline."""
    if not (0.0 <= edge_prob <= 1.0):
        raise ValueError(f"edge_prob must be in [0, 1], got {edge_prob}")
    rng = as_generator(rng)
    iu, ju = np.triu_indices(n, k=1)
    pair = np.zeros((n, n), dtype=np.int64)
    hit = rng.random(iu.size) < edge_prob
    pair[iu[hit], ju[hit]] = 1
    pair[ju[hit], iu[hit]] = 1
    return graph_from_categories(np.zeros(n, dtype=np.int64), pair, CategorySpace())


def property_group(value: float, which: str) -> str:
    lo, hi = CLUSTERING_THRESHOLDS if which == "clustering" else DEGREE_THRESHOLDS
    if value < lo:
        return "low"
    if value < hi:
        return "medium"
    return "high"


def _draw_spec(rng: np.random.Generator) -> WsSpec:
    lo, hi = SWEEP_NODE_RANGE
    while True:
        n = int(rng.integers(lo, hi + 1))
        max_k = n // 2
        if max_k >= _MIN_NEIGHBORS:
            break
    k = int(rng.integers(_MIN_NEIGHBORS // 2, max_k // 2 + 1)) * 2
    return WsSpec(n, k, float(rng.random()))


def build_property_corpus(
    budget_per_group: int,
    which: str,
    rng: np.random.Generator | int,
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
) -> Corpus:
    """Sweep the generator until each low/medium/high group holds
    ``budget_per_group`` graphs, prompt each graph with its own measured
    statistics, and split the groups as domains.

    ``which`` picks the grading statistic: "clustering" or "degree".
    Neighbor counts are capped at n/2 to keep the sweep away from
    near-complete rings, so with the node range [10, 110] the reachable
    average degree tops out near 55.
    """
    if which not in ("clustering", "degree"):
        raise ValueError(f"which must be 'clustering' or 'degree', got {which!r}")
    if budget_per_group < 3:
        raise ValueError("budget_per_group must be >= 3 so every split is usable")
    rng = as_generator(rng)
    filled: dict[str, list] = {"low": [], "medium": [], "high": []}
    attempts = 0
    cap = 600 * budget_per_group
    while attempts < cap and any(len(v) < budget_per_group for v in filled.values()):
        attempts += 1
        spec = _draw_spec(rng)
        g = watts_strogatz(spec, rng)
        stats = graph_stats(g)
        value = stats.avg_clustering if which == "clustering" else stats.avg_degree
        group = property_group(value, which)
        if len(filled[group]) >= budget_per_group:
            continue
        prompt = render_property_prompt(
            stats.avg_degree, stats.avg_clustering, group, which,
            rng=child_seed(rng))
        filled[group].append((g, f"ws-{which}-{group}", prompt))
    short = {k: len(v) for k, v in filled.items() if len(v) < budget_per_group}
    if short:
        lo, hi = CLUSTERING_THRESHOLDS if which == "clustering" else DEGREE_THRESHOLDS
        raise ValueError(
            f"sweep could not fill groups {short} for '{which}' with thresholds "
            f"({lo}, {hi}) after {attempts} attempts")
    items = filled["low"] + filled["medium"] + filled["high"]
    return split(items, ratios, rng=child_seed(rng))
