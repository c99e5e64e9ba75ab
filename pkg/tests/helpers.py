"""Shared construction helpers for the test suite."""

from __future__ import annotations

import itertools

import numpy as np

from graphdiffuse.graphs import CategorySpace, Graph, adjacency, graph_from_categories, new_graph


def random_graph(rng: np.random.Generator, n: int, p: float,
                 space: CategorySpace | None = None) -> Graph:
    """Erdos-Renyi style graph; extra categories drawn uniformly if present."""
    space = space or CategorySpace()
    pair = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                c = 1 if space.n_edge_categories == 2 else int(
                    rng.integers(1, space.n_edge_categories))
                pair[i, j] = pair[j, i] = c
    node = np.zeros(n, dtype=np.int64)
    if space.n_node_categories > 1:
        node = rng.integers(0, space.n_node_categories, size=n)
    return graph_from_categories(node, pair, space)


def complete_graph(n: int) -> Graph:
    return new_graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def path_graph(n: int) -> Graph:
    return new_graph(n, [(i, i + 1) for i in range(n - 1)])


def star_graph(n_leaves: int) -> Graph:
    return new_graph(n_leaves + 1, [(0, i + 1) for i in range(n_leaves)])


def brute_force_orbits(g: Graph) -> tuple[np.ndarray, dict[str, int]]:
    """Independent O(n^4) orbit counter: enumerate every 4-node subset and
    classify the induced subgraph by edge count and degree multiset."""
    A = adjacency(g)
    n = g.n_nodes
    out = np.zeros((n, 11), dtype=np.int64)
    census = {k: 0 for k in
              ("path4", "claw", "cycle4", "paw", "diamond", "clique4")}
    for quad in itertools.combinations(range(n), 4):
        sub = A[np.ix_(quad, quad)]
        deg = sub.sum(axis=1)
        e = int(deg.sum()) // 2
        if e < 3:
            continue
        if e == 3:
            if deg.max() == 3:
                census["claw"] += 1
                for k, v in enumerate(quad):
                    out[v, 3 if deg[k] == 3 else 2] += 1
            elif deg.min() == 1:
                census["path4"] += 1
                for k, v in enumerate(quad):
                    out[v, 1 if deg[k] == 2 else 0] += 1
            # remaining 3-edge case is a triangle plus an isolated node
        elif e == 4:
            if deg.min() == 2:
                census["cycle4"] += 1
                for v in quad:
                    out[v, 4] += 1
            else:
                census["paw"] += 1
                for k, v in enumerate(quad):
                    orbit = {1: 5, 2: 6, 3: 7}[int(deg[k])]
                    out[v, orbit] += 1
        elif e == 5:
            census["diamond"] += 1
            for k, v in enumerate(quad):
                out[v, 9 if deg[k] == 3 else 8] += 1
        else:
            census["clique4"] += 1
            for v in quad:
                out[v, 10] += 1
    return out, census
