"""Dense categorical graphs and their basic statistics.

A graph holds one-hot category tensors for nodes and for every ordered node
pair.  Edge category 0 means "no edge", the diagonal is pinned to category 0,
and the pair tensor is symmetric, so undirected structure is recovered by
thresholding on category != 0.  Everything is kept dense because the intended
scale is a few hundred nodes at most.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CategorySpace",
    "Graph",
    "SoftGraph",
    "GraphStats",
    "new_graph",
    "graph_from_categories",
    "adjacency",
    "node_categories",
    "edge_categories",
    "degree_vector",
    "degree_histogram",
    "clustering_coefficient",
    "laplacian_spectrum",
    "graph_stats",
    "induced_subgraph",
    "is_connected",
    "graph_hash",
    "to_edgelist_text",
    "from_edgelist_text",
    "write_edgelist",
    "read_edgelist",
]


@dataclass(frozen=True)
class CategorySpace:
    """Category counts shared by every graph in a corpus.

    ``n_node_categories`` is the width of the node one-hot rows and
    ``n_edge_categories`` the width of the pair one-hot rows.  Edge category 0
    is reserved for "no edge", so at least two edge categories are required.
    Structure-only corpora use the degenerate node space of width 1.
    """

    n_node_categories: int = 1
    n_edge_categories: int = 2

    def __post_init__(self) -> None:
        if self.n_node_categories < 1:
            raise ValueError(
                f"n_node_categories must be >= 1, got {self.n_node_categories}"
            )
        if self.n_edge_categories < 2:
            raise ValueError(
                f"n_edge_categories must be >= 2, got {self.n_edge_categories}"
            )


def _as_readonly(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    if out is arr:
        out = arr.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Graph:
    """Immutable one-hot graph.

    ``node_onehot`` has shape (n, d_X) and ``pair_onehot`` shape (n, n, d_E),
    both with exact {0, 1} entries.  Invariants (validated on construction):
    every row sums to 1, the pair tensor is symmetric in its first two axes,
    and the diagonal carries category 0.
    """

    space: CategorySpace
    node_onehot: np.ndarray
    pair_onehot: np.ndarray

    def __post_init__(self) -> None:
        X = np.asarray(self.node_onehot, dtype=np.uint8)
        E = np.asarray(self.pair_onehot, dtype=np.uint8)
        if X.ndim != 2 or X.shape[1] != self.space.n_node_categories:
            raise ValueError(
                f"node tensor must have shape (n, {self.space.n_node_categories}), "
                f"got {X.shape}"
            )
        n = X.shape[0]
        if E.shape != (n, n, self.space.n_edge_categories):
            raise ValueError(
                f"pair tensor must have shape ({n}, {n}, "
                f"{self.space.n_edge_categories}), got {E.shape}"
            )
        if not np.isin(X, (0, 1)).all() or not np.isin(E, (0, 1)).all():
            raise ValueError("category tensors must be exactly one-hot (0/1 entries)")
        bad = np.flatnonzero(X.sum(axis=1) != 1)
        if bad.size:
            raise ValueError(f"node row {bad[0]} is not one-hot")
        rowsum = E.sum(axis=2)
        if (rowsum != 1).any():
            i, j = np.argwhere(rowsum != 1)[0]
            raise ValueError(f"pair slot ({i}, {j}) is not one-hot")
        if (E != E.transpose(1, 0, 2)).any():
            diff = np.argwhere((E != E.transpose(1, 0, 2)).any(axis=2))[0]
            raise ValueError(f"pair tensor is asymmetric at slot ({diff[0]}, {diff[1]})")
        diag = E[np.arange(n), np.arange(n)]
        if n and not (diag[:, 0] == 1).all():
            i = int(np.flatnonzero(diag[:, 0] != 1)[0])
            raise ValueError(f"diagonal slot ({i}, {i}) must carry category 0")
        object.__setattr__(self, "node_onehot", _as_readonly(X))
        object.__setattr__(self, "pair_onehot", _as_readonly(E))

    @property
    def n_nodes(self) -> int:
        return self.node_onehot.shape[0]

    @property
    def n_edges(self) -> int:
        return int(adjacency(self).sum()) // 2


@dataclass(frozen=True)
class SoftGraph:
    """Per-slot categorical distributions with the same layout as ``Graph``.

    Used for denoiser outputs and posterior mixes.  Rows must be finite,
    non-negative and sum to 1 within 1e-9; the pair tensor must be symmetric
    and the diagonal a point mass on category 0.
    """

    space: CategorySpace
    node_probs: np.ndarray
    pair_probs: np.ndarray

    def __post_init__(self) -> None:
        X = np.asarray(self.node_probs, dtype=np.float64)
        E = np.asarray(self.pair_probs, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.space.n_node_categories:
            raise ValueError(f"node probs must have shape (n, d_X), got {X.shape}")
        n = X.shape[0]
        if E.shape != (n, n, self.space.n_edge_categories):
            raise ValueError(f"pair probs have shape {E.shape}, expected "
                             f"({n}, {n}, {self.space.n_edge_categories})")
        for name, arr in (("node", X), ("pair", E)):
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} probs contain non-finite values")
            if (arr < 0).any():
                raise ValueError(f"{name} probs contain negative values")
        if n:
            if np.abs(X.sum(axis=1) - 1.0).max() > 1e-9:
                raise ValueError("node prob rows must sum to 1 within 1e-9")
            if np.abs(E.sum(axis=2) - 1.0).max() > 1e-9:
                raise ValueError("pair prob rows must sum to 1 within 1e-9")
            if np.abs(E - E.transpose(1, 0, 2)).max() > 1e-9:
                raise ValueError("pair probs must be symmetric within 1e-9")
            diag = E[np.arange(n), np.arange(n)]
            if np.abs(diag[:, 0] - 1.0).max() > 1e-9:
                raise ValueError("diagonal pair probs must be a point mass on category 0")
        object.__setattr__(self, "node_probs", _as_readonly(X))
        object.__setattr__(self, "pair_probs", _as_readonly(E))

    @property
    def n_nodes(self) -> int:
        return self.node_probs.shape[0]


def graph_from_categories(
    node_cats: np.ndarray, pair_cats: np.ndarray, space: CategorySpace
) -> Graph:
    """Build a Graph from integer category arrays (n,) and (n, n)."""
    node_cats = np.asarray(node_cats, dtype=np.int64)
    pair_cats = np.asarray(pair_cats, dtype=np.int64)
    n = node_cats.shape[0]
    if node_cats.min(initial=0) < 0 or node_cats.max(initial=0) >= space.n_node_categories:
        raise ValueError("node category out of range")
    if pair_cats.min(initial=0) < 0 or pair_cats.max(initial=0) >= space.n_edge_categories:
        raise ValueError("edge category out of range")
    X = np.zeros((n, space.n_node_categories), dtype=np.uint8)
    X[np.arange(n), node_cats] = 1
    E = np.zeros((n, n, space.n_edge_categories), dtype=np.uint8)
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    E[ii, jj, pair_cats] = 1
    return Graph(space, X, E)


def new_graph(
    n: int,
    edges,
    space: CategorySpace | None = None,
    node_categories=None,
) -> Graph:
    """Construct a graph from an edge list.

    ``edges`` is an iterable of (i, j) or (i, j, category) with 0-based node
    ids; category defaults to 1.  Self-loops and out-of-range ids are
    rejected, later duplicates of the same unordered pair as well.
    """
    space = space or CategorySpace()
    if n < 0:
        raise ValueError(f"node count must be >= 0, got {n}")
    node_cats = np.zeros(n, dtype=np.int64)
    if node_categories is not None:
        node_cats = np.asarray(node_categories, dtype=np.int64)
        if node_cats.shape != (n,):
            raise ValueError(f"node_categories must have shape ({n},)")
    pair_cats = np.zeros((n, n), dtype=np.int64)
    seen: set[tuple[int, int]] = set()
    for entry in edges:
        if len(entry) == 2:
            i, j = entry
            c = 1
        elif len(entry) == 3:
            i, j, c = entry
        else:
            raise ValueError(f"edge entry {entry!r} must be (i, j) or (i, j, category)")
        i, j, c = int(i), int(j), int(c)
        if i == j:
            raise ValueError(f"self-loop ({i}, {i}) is not allowed")
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge ({i}, {j}) references a node outside 0..{n - 1}")
        if not (0 <= c < space.n_edge_categories):
            raise ValueError(f"edge ({i}, {j}) has category {c} outside the edge space")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ValueError(f"duplicate edge ({key[0]}, {key[1]})")
        seen.add(key)
        pair_cats[i, j] = c
        pair_cats[j, i] = c
    return graph_from_categories(node_cats, pair_cats, space)


def adjacency(g: Graph) -> np.ndarray:
    """Boolean n x n adjacency matrix (any edge category except 0)."""
    return g.pair_onehot[:, :, 0] == 0


def node_categories(g: Graph) -> np.ndarray:
    return g.node_onehot.argmax(axis=1)


def edge_categories(g: Graph) -> np.ndarray:
    return g.pair_onehot.argmax(axis=2)


def degree_vector(g: Graph) -> np.ndarray:
    return adjacency(g).sum(axis=1).astype(np.int64)


def degree_histogram(g: Graph) -> np.ndarray:
    """Degree counts, index d = number of nodes with degree d."""
    deg = degree_vector(g)
    if deg.size == 0:
        return np.zeros(1, dtype=np.int64)
    return np.bincount(deg, minlength=int(deg.max()) + 1)


def clustering_coefficient(g: Graph) -> np.ndarray:
    """Per-node local clustering; nodes with degree < 2 get 0."""
    A = adjacency(g).astype(np.float64)
    deg = A.sum(axis=1)
    triangles = np.einsum("ij,jk,ki->i", A, A, A) / 2.0
    denom = deg * (deg - 1) / 2.0
    out = np.zeros_like(deg)
    mask = deg >= 2
    out[mask] = triangles[mask] / denom[mask]
    return out


def laplacian_spectrum(g: Graph) -> np.ndarray:
    """Eigenvalues of the symmetric normalized Laplacian, ascending.

    Isolated nodes contribute a diagonal entry of 1 (their scaling factor is
    treated as 1), which keeps the spectrum inside [0, 2] and makes the empty
    graph's spectrum all ones.
    """
    n = g.n_nodes
    if n == 0:
        return np.zeros(0, dtype=np.float64)
    A = adjacency(g).astype(np.float64)
    deg = A.sum(axis=1)
    inv_sqrt = np.ones_like(deg)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
    L = np.eye(n) - (inv_sqrt[:, None] * A) * inv_sqrt[None, :]
    return np.linalg.eigvalsh(L)


@dataclass(frozen=True)
class GraphStats:
    """Scalar summary used by corpus tables and prompt rendering."""

    n_nodes: int
    n_edges: int
    avg_degree: float
    avg_clustering: float
    degrees: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "degrees", _as_readonly(np.asarray(self.degrees)))


def graph_stats(g: Graph) -> GraphStats:
    deg = degree_vector(g)
    n = g.n_nodes
    avg_deg = float(deg.mean()) if n else 0.0
    avg_cc = float(clustering_coefficient(g).mean()) if n else 0.0
    return GraphStats(
        n_nodes=n,
        n_edges=int(deg.sum()) // 2,
        avg_degree=avg_deg,
        avg_clustering=avg_cc,
        degrees=deg,
    )


def induced_subgraph(g: Graph, nodes) -> Graph:
    """Subgraph on the given node ids, relabeled 0..len-1 in the given order."""
    idx = np.asarray(list(nodes), dtype=np.int64)
    if idx.size != np.unique(idx).size:
        raise ValueError("node list for induced subgraph contains duplicates")
    if idx.size and (idx.min() < 0 or idx.max() >= g.n_nodes):
        raise ValueError("node id outside the graph")
    X = g.node_onehot[idx]
    E = g.pair_onehot[np.ix_(idx, idx)]
    return Graph(g.space, X, E)


def is_connected(g: Graph) -> bool:
    """True for the empty graph and any graph with one BFS component."""
    n = g.n_nodes
    if n <= 1:
        return True
    A = adjacency(g)
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        v = stack.pop()
        for w in np.flatnonzero(A[v]):
            if not seen[w]:
                seen[w] = True
                stack.append(int(w))
    return bool(seen.all())


def graph_hash(g: Graph) -> str:
    """Stable content hash over the category tensors and space."""
    h = hashlib.sha256()
    h.update(
        f"{g.n_nodes} {g.space.n_node_categories} {g.space.n_edge_categories}\n".encode()
    )
    h.update(np.ascontiguousarray(g.node_onehot).tobytes())
    h.update(np.ascontiguousarray(g.pair_onehot).tobytes())
    return h.hexdigest()


def to_edgelist_text(g: Graph) -> str:
    """Serialize to the plain edge-list format.

    First line is "n d_X d_E".  Nodes with a category other than 0 appear as
    "v i category" lines, then one "i j category" line per unordered edge with
    i < j, both sorted for a canonical byte stream.
    """
    lines = [f"{g.n_nodes} {g.space.n_node_categories} {g.space.n_edge_categories}"]
    ncats = node_categories(g)
    for i in np.flatnonzero(ncats != 0):
        lines.append(f"v {i} {ncats[i]}")
    ecats = edge_categories(g)
    for i in range(g.n_nodes):
        for j in range(i + 1, g.n_nodes):
            if ecats[i, j] != 0:
                lines.append(f"{i} {j} {ecats[i, j]}")
    return "\n".join(lines) + "\n"


def from_edgelist_text(text: str) -> Graph:
    """Parse the edge-list format; raises ValueError with the 1-based line number."""
    lines = text.splitlines()
    header_idx = None
    n = dx = de = 0
    node_cats: np.ndarray | None = None
    edges: list[tuple[int, int, int]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if header_idx is None:
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: header must be 'n d_X d_E'")
            try:
                n, dx, de = (int(p) for p in parts)
            except ValueError:
                raise ValueError(f"line {lineno}: header must be three integers") from None
            header_idx = lineno
            node_cats = np.zeros(n, dtype=np.int64)
            continue
        if parts[0] == "v":
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: node line must be 'v i category'")
            try:
                i, c = int(parts[1]), int(parts[2])
            except ValueError:
                raise ValueError(f"line {lineno}: node line must hold integers") from None
            if not 0 <= i < n:
                raise ValueError(f"line {lineno}: node id {i} outside 0..{n - 1}")
            node_cats[i] = c
            continue
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'i j category'")
        try:
            i, j, c = (int(p) for p in parts)
        except ValueError:
            raise ValueError(f"line {lineno}: edge line must hold integers") from None
        edges.append((i, j, c))
    if header_idx is None:
        raise ValueError("line 1: missing header line 'n d_X d_E'")
    space = CategorySpace(n_node_categories=dx, n_edge_categories=de)
    return new_graph(n, edges, space, node_categories=node_cats)


def write_edgelist(g: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(to_edgelist_text(g))


def read_edgelist(path) -> Graph:
    with open(path, "r", encoding="utf-8") as fh:
        return from_edgelist_text(fh.read())
