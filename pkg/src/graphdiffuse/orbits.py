"""Node orbit counts over the six connected 4-node subgraph types.

The types, ordered by edge count, are: 4-path, claw, 4-cycle, paw (triangle
with a pendant edge), diamond (4-clique minus an edge) and 4-clique.  Their
automorphism orbits give 11 per-node counts, laid out as

    0 path_end      1 path_mid
    2 claw_leaf     3 claw_hub
    4 cycle4
    5 paw_pendant   6 paw_far       7 paw_attach
    8 diamond_tip   9 diamond_hub
    10 clique4

All counts are over induced subgraphs.  The implementation works from each
node's neighborhood adjacency submatrix plus a handful of global matrix
products, so the cost is a few dense matmuls instead of a quadruple loop.
Counts are integers throughout; intermediate float matmuls stay far below
2**53 at the supported scale, so the final casts are exact.
"""

from __future__ import annotations

import numpy as np

from .graphs import Graph, adjacency

__all__ = ["ORBIT_NAMES", "SUBSTRUCTURE_NAMES", "orbit_counts", "substructure_census"]

ORBIT_NAMES = (
    "path_end",
    "path_mid",
    "claw_leaf",
    "claw_hub",
    "cycle4",
    "paw_pendant",
    "paw_far",
    "paw_attach",
    "diamond_tip",
    "diamond_hub",
    "clique4",
)

SUBSTRUCTURE_NAMES = ("path4", "claw", "cycle4", "paw", "diamond", "clique4")


def _choose2(x: np.ndarray) -> np.ndarray:
    return x * (x - 1) // 2


def orbit_counts(g: Graph) -> np.ndarray:
    """Per-node orbit counts, shape (n, 11), dtype int64."""
    n = g.n_nodes
    out = np.zeros((n, 11), dtype=np.int64)
    if n < 4:
        return out
    Ab = adjacency(g)
    A = Ab.astype(np.float64)
    deg = Ab.sum(axis=1).astype(np.int64)
    A2f = A @ A
    A2 = np.rint(A2f).astype(np.int64)  # common-neighbor counts
    tri = (A2 * Ab).sum(axis=1) // 2  # triangles at each node
    # W[z, v] = (#triangles on edge (z, v)) for edges, used to count, per
    # (z, u), the triangle edges at z with one endpoint adjacent to u.
    W = np.where(Ab, A2f - 1.0, 0.0)
    WA = W @ A
    AWA_diag = np.rint(((A @ W) * A).sum(axis=1)).astype(np.int64)
    A_tri = np.rint(A @ tri.astype(np.float64)).astype(np.int64)

    o = {k: np.zeros(n, dtype=np.int64) for k in range(11)}

    for u in range(n):
        d = int(deg[u])
        if d == 0:
            continue
        idx = np.flatnonzero(Ab[u])
        B = A[np.ix_(idx, idx)]
        B2 = np.rint(B @ B).astype(np.int64)
        Bi = np.rint(B).astype(np.int64)
        degB = Bi.sum(axis=1)
        edges_B = int(degB.sum()) // 2
        tri_B_per = (Bi * B2).sum(axis=1) // 2  # triangles inside the neighborhood
        tri_B = int(tri_B_per.sum()) // 3
        A2sub = A2[np.ix_(idx, idx)]
        A2u = A2[u, idx]
        deg_nb = deg[idx]

        # cliques: triangles among u's neighbors complete a K4 with u.
        o[10][u] = tri_B
        # diamond hub: u and a neighbor v are the two high-degree nodes;
        # pick 2 of their common neighbors, drop the choices that close a K4.
        o[9][u] = int(_choose2(A2u).sum()) - 3 * tri_B
        # diamond tip / 4-cycle: for a pair (v, w) of u's neighbors, the
        # fourth node is a common neighbor of v and w that is neither u nor
        # adjacent to u; A2sub counts it in G, B2 inside the neighborhood.
        spare = A2sub - 1 - B2
        o[8][u] = int((spare * Bi).sum()) // 2
        off = ~np.eye(d, dtype=bool)
        o[4][u] = int((spare * (Bi == 0) * off).sum()) // 2
        # paw attach: triangle edge (v, w) in the neighborhood plus a
        # pendant neighbor of u adjacent to neither v nor w.
        pend = (d - 2) - (degB[:, None] - 1) - (degB[None, :] - 1) + B2
        o[7][u] = int((pend * Bi).sum()) // 2
        # paw far corner: the pendant hangs off v or w instead of u.
        far = (
            deg_nb[:, None]
            + deg_nb[None, :]
            - A2u[:, None]
            - A2u[None, :]
            - 2 * A2sub
            + 2 * B2
        )
        o[6][u] = int((far * Bi).sum()) // 2
        # paw pendant: for each neighbor z, triangles at z that avoid both u
        # and u's other neighbors.
        o[5][u] = int(A_tri[u] - 2 * tri[u] - AWA_diag[u] + 3 * tri_B)
        # claw leaf: pairs of z's other neighbors outside u's neighborhood,
        # minus the adjacent pairs (those are exactly the triangles counted
        # for the paw-pendant orbit).
        o[2][u] = int(_choose2(deg_nb - 1 - A2u).sum()) - o[5][u]
        # claw hub: triples of u's neighbors with no edge among them.
        e3 = tri_B
        cherries = int(_choose2(degB).sum())
        e2 = cherries - 3 * e3
        e1 = edges_B * (d - 2) - 2 * e2 - 3 * e3
        o[3][u] = d * (d - 1) * (d - 2) // 6 - e1 - e2 - e3

    # paths: walk the edges once, treating each edge as the middle of a
    # 4-path; ends live in the exclusive neighborhoods of its endpoints.
    o4 = o[0]
    o5 = o[1]
    for u, z in zip(*np.nonzero(np.triu(Ab, k=1))):
        sa = Ab[u] & ~Ab[z]
        sa[z] = False
        sb = Ab[z] & ~Ab[u]
        sb[u] = False
        ca = int(sa.sum())
        cb = int(sb.sum())
        if ca == 0 or cb == 0:
            continue
        ia = np.flatnonzero(sa)
        ib = np.flatnonzero(sb)
        between = Ab[np.ix_(ia, ib)]
        rows = between.sum(axis=1).astype(np.int64)
        cols = between.sum(axis=0).astype(np.int64)
        pairs = ca * cb - int(rows.sum())
        o5[u] += pairs
        o5[z] += pairs
        o4[ia] += cb - rows
        o4[ib] += ca - cols

    for k in range(11):
        out[:, k] = o[k]
    return out


def substructure_census(g: Graph) -> dict[str, int]:
    """Whole-graph counts of the six connected 4-node subgraph types."""
    orb = orbit_counts(g)
    totals = orb.sum(axis=0)
    census = {
        "path4": int(totals[0]) // 2,
        "claw": int(totals[3]),
        "cycle4": int(totals[4]) // 4,
        "paw": int(totals[7]),
        "diamond": int(totals[9]) // 2,
        "clique4": int(totals[10]) // 4,
    }
    return census
