"""Corpus assembly: file ingestion, ego-ball subsampling, splits, stats.

A corpus is a flat list of (graph, domain, split, prompt) entries sharing one
category space.  Large source graphs are cut down to local ego balls before
entering a corpus, since the generative model works at the scale of a few
hundred nodes.
"""

from __future__ import annotations

import collections
import hashlib
import logging
import os
from dataclasses import dataclass

import numpy as np

from .graphs import (
    CategorySpace,
    Graph,
    adjacency,
    graph_hash,
    graph_stats,
    induced_subgraph,
    new_graph,
    read_edgelist,
    write_edgelist,
)
from .rng import as_generator

__all__ = [
    "SPLITS",
    "CorpusEntry",
    "Corpus",
    "EgoSampleResult",
    "parse_matrix_market",
    "read_graph_file",
    "ego_sample",
    "split",
    "DomainStatRow",
    "domain_stats",
    "draw_node_count",
    "corpus_hash",
    "write_corpus",
    "read_corpus",
]

log = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")

MANIFEST_HEADER = "# graphdiffuse corpus manifest v1"


@dataclass(frozen=True)
class CorpusEntry:
    graph: Graph
    domain: str
    split: str
    prompt: str | None = None


@dataclass(frozen=True)
class Corpus:
    """Immutable entry list; every domain must keep at least one train graph."""

    space: CategorySpace
    entries: tuple

    def __post_init__(self) -> None:
        entries = tuple(self.entries)
        train_by_domain = collections.Counter()
        for e in entries:
            if e.split not in SPLITS:
                raise ValueError(f"unknown split {e.split!r}")
            if e.graph.space != self.space:
                raise ValueError("corpus entries must share one category space")
            if e.split == "train":
                train_by_domain[e.domain] += 1
        missing = sorted(
            {e.domain for e in entries} - set(train_by_domain)
        )
        if missing:
            raise ValueError(f"domains without a train graph: {', '.join(missing)}")
        object.__setattr__(self, "entries", entries)

    def domains(self) -> list[str]:
        return sorted({e.domain for e in self.entries})

    def select(self, split: str | None = None, domain: str | None = None):
        out = []
        for e in self.entries:
            if split is not None and e.split != split:
                continue
            if domain is not None and e.domain != domain:
                continue
            out.append(e)
        return out

    def graphs(self, split: str | None = None, domain: str | None = None):
        return [e.graph for e in self.select(split, domain)]

    def without_domain(self, domain: str) -> "Corpus":
        kept = tuple(e for e in self.entries if e.domain != domain)
        return Corpus(self.space, kept)

    def only_domain(self, domain: str) -> "Corpus":
        kept = tuple(e for e in self.entries if e.domain == domain)
        return Corpus(self.space, kept)


def parse_matrix_market(text: str) -> Graph:
    """Read a coordinate Matrix Market file as an undirected simple graph.

    Every stored entry becomes an edge of category 1 regardless of any value
    column; self-loops and repeated pairs are dropped (with a debug log).
    """
    lines = text.splitlines()
    if not lines or not lines[0].startswith("%%MatrixMarket"):
        raise ValueError("line 1: missing MatrixMarket banner")
    banner = lines[0].split()
    if len(banner) < 3 or banner[1] != "matrix" or banner[2] != "coordinate":
        raise ValueError("line 1: only 'matrix coordinate' files are supported")
    dims = None
    edges: set[tuple[int, int]] = set()
    dropped_loops = 0
    dupes = 0
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        parts = line.split()
        if dims is None:
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 'rows cols nnz'")
            rows, cols, _ = (int(p) for p in parts)
            if rows != cols:
                raise ValueError(f"line {lineno}: adjacency must be square, "
                                 f"got {rows} x {cols}")
            dims = rows
            continue
        if len(parts) < 2:
            raise ValueError(f"line {lineno}: expected at least 'i j'")
        i, j = int(parts[0]) - 1, int(parts[1]) - 1
        if not (0 <= i < dims and 0 <= j < dims):
            raise ValueError(f"line {lineno}: index outside 1..{dims}")
        if i == j:
            dropped_loops += 1
            continue
        key = (min(i, j), max(i, j))
        if key in edges:
            dupes += 1
            continue
        edges.add(key)
    if dims is None:
        raise ValueError("missing size line")
    if dropped_loops or dupes:
        log.debug("matrix market: dropped %d self-loops, %d duplicate pairs",
                  dropped_loops, dupes)
    return new_graph(dims, sorted(edges))


def read_graph_file(path) -> Graph:
    """Dispatch on extension: .mtx is Matrix Market, everything else edge-list."""
    if str(path).endswith(".mtx"):
        with open(path, "r", encoding="utf-8") as fh:
            return parse_matrix_market(fh.read())
    return read_edgelist(path)


@dataclass(frozen=True)
class EgoSampleResult:
    graphs: tuple
    attempts: int
    duplicates: int
    shortfall: int


def _ego_ball(A: np.ndarray, center: int, hops: int) -> list[int]:
    """Nodes within the hop ball, ordered by (distance, id)."""
    n = A.shape[0]
    dist = np.full(n, -1, dtype=np.int64)
    dist[center] = 0
    frontier = [center]
    for depth in range(1, hops + 1):
        nxt = []
        for v in frontier:
            for w in np.flatnonzero(A[v]):
                if dist[w] < 0:
                    dist[w] = depth
                    nxt.append(int(w))
        frontier = nxt
        if not frontier:
            break
    inside = np.flatnonzero(dist >= 0)
    return sorted(inside.tolist(), key=lambda v: (int(dist[v]), v))


def ego_sample(
    g: Graph,
    hops: int,
    max_nodes: int,
    count: int,
    rng: np.random.Generator | int,
    center: int | None = None,
) -> EgoSampleResult:
    """Cut connected ego balls around random centers.

    Balls larger than ``max_nodes`` keep the nearest nodes (BFS distance,
    ties by node id), which preserves connectivity.  Draws whose ball has a
    single node, or that once relabeled duplicate an earlier draw exactly,
    are retried; after 20 tries per requested graph the result is returned
    short, with the shortfall recorded and logged.
    """
    if hops < 1:
        raise ValueError(f"hops must be >= 1, got {hops}")
    if max_nodes < 2:
        raise ValueError(f"max_nodes must be >= 2, got {max_nodes}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if g.n_nodes == 0:
        raise ValueError("cannot sample ego balls from an empty graph")
    rng = as_generator(rng)
    A = adjacency(g)
    out: list[Graph] = []
    seen: set[str] = set()
    attempts = 0
    duplicates = 0
    cap = 20 * count
    while len(out) < count and attempts < cap:
        attempts += 1
        c = int(rng.integers(g.n_nodes)) if center is None else int(center)
        ball = _ego_ball(A, c, hops)[:max_nodes]
        if len(ball) < 2:
            continue
        sub = induced_subgraph(g, sorted(ball))
        h = graph_hash(sub)
        if h in seen:
            duplicates += 1
            continue
        seen.add(h)
        out.append(sub)
    shortfall = count - len(out)
    if shortfall:
        log.warning("ego_sample: %d of %d subgraphs missing after %d attempts "
                    "(%d duplicates)", shortfall, count, attempts, duplicates)
    return EgoSampleResult(tuple(out), attempts, duplicates, shortfall)


def _allocate(n: int, ratios: tuple[float, float, float]) -> list[int]:
    """Largest-remainder allocation of n items over the three splits, with at
    least one train item."""
    target = [n * r for r in ratios]
    base = [int(x) for x in target]
    rem = n - sum(base)
    order = sorted(range(3), key=lambda k: (target[k] - base[k], -k), reverse=True)
    for k in order[:rem]:
        base[k] += 1
    if base[0] == 0:
        donor = int(np.argmax(base))
        base[donor] -= 1
        base[0] += 1
    return base


def split(
    items,
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
    rng: np.random.Generator | int = 0,
) -> Corpus:
    """Shuffle each domain independently and cut train/val/test.

    ``items`` holds (graph, domain) or (graph, domain, prompt) tuples.  Every
    domain needs at least 3 graphs so each split stays meaningful; counts per
    split land within one graph of the exact ratio share.
    """
    rng = as_generator(rng)
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise ValueError("ratios must be three non-negative fractions")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)}")
    norm = []
    for item in items:
        if len(item) == 2:
            g, dom = item
            prompt = None
        else:
            g, dom, prompt = item
        norm.append((g, str(dom), prompt))
    if not norm:
        raise ValueError("cannot split an empty item list")
    space = norm[0][0].space
    by_domain: dict[str, list] = collections.defaultdict(list)
    for g, dom, prompt in norm:
        by_domain[dom].append((g, prompt))
    thin = sorted(d for d, members in by_domain.items() if len(members) < 3)
    if thin:
        raise ValueError(f"domains with fewer than 3 graphs: {', '.join(thin)}")
    entries = []
    for dom in sorted(by_domain):
        members = by_domain[dom]
        perm = rng.permutation(len(members))
        counts = _allocate(len(members), tuple(ratios))
        cursor = 0
        for split_name, cnt in zip(SPLITS, counts):
            for k in perm[cursor:cursor + cnt]:
                g, prompt = members[int(k)]
                entries.append(CorpusEntry(g, dom, split_name, prompt))
            cursor += cnt
    return Corpus(space, tuple(entries))


@dataclass(frozen=True)
class DomainStatRow:
    domain: str
    n_graphs: int
    nodes_mean: float
    nodes_std: float
    nodes_min: int
    nodes_max: int
    edges_mean: float
    edges_std: float
    edges_min: int
    edges_max: int
    degree_mean: float
    degree_std: float
    clustering_mean: float
    clustering_std: float


def domain_stats(corpus: Corpus, split_name: str | None = None) -> list[DomainStatRow]:
    """Per-domain structural summary; std is the population standard deviation."""
    rows = []
    for dom in corpus.domains():
        graphs = corpus.graphs(split_name, dom)
        if not graphs:
            log.warning("domain %s has no graphs in split %r, skipping", dom, split_name)
            continue
        stats = [graph_stats(g) for g in graphs]
        nodes = np.array([s.n_nodes for s in stats], dtype=np.float64)
        edges = np.array([s.n_edges for s in stats], dtype=np.float64)
        degs = np.array([s.avg_degree for s in stats])
        ccs = np.array([s.avg_clustering for s in stats])
        rows.append(DomainStatRow(
            domain=dom,
            n_graphs=len(graphs),
            nodes_mean=float(nodes.mean()), nodes_std=float(nodes.std()),
            nodes_min=int(nodes.min()), nodes_max=int(nodes.max()),
            edges_mean=float(edges.mean()), edges_std=float(edges.std()),
            edges_min=int(edges.min()), edges_max=int(edges.max()),
            degree_mean=float(degs.mean()), degree_std=float(degs.std()),
            clustering_mean=float(ccs.mean()), clustering_std=float(ccs.std()),
        ))
    return rows


def draw_node_count(
    corpus: Corpus, rng: np.random.Generator | int, domain: str | None = None
) -> int:
    """Draw a node count from the empirical train histogram."""
    rng = as_generator(rng)
    graphs = corpus.graphs("train", domain)
    if not graphs:
        raise ValueError(f"no train graphs for domain {domain!r}")
    counts = [g.n_nodes for g in graphs]
    return int(counts[int(rng.integers(len(counts)))])


def corpus_hash(corpus: Corpus) -> str:
    """Content hash over graphs, domains, splits and prompts, order-sensitive."""
    h = hashlib.sha256()
    for e in corpus.entries:
        h.update(graph_hash(e.graph).encode())
        h.update(f"|{e.domain}|{e.split}|{e.prompt or ''}\n".encode())
    return h.hexdigest()


def write_corpus(corpus: Corpus, out_dir) -> str:
    """Materialize graphs, prompts and the manifest; returns the manifest path."""
    out_dir = str(out_dir)
    graph_dir = os.path.join(out_dir, "graphs")
    prompt_dir = os.path.join(out_dir, "prompts")
    os.makedirs(graph_dir, exist_ok=True)
    lines = [MANIFEST_HEADER, "# path\tdomain\tsplit\tprompt\thash"]
    for k, e in enumerate(corpus.entries):
        rel = f"graphs/{k:05d}.edgelist"
        write_edgelist(e.graph, os.path.join(out_dir, rel))
        prompt_rel = "-"
        if e.prompt is not None:
            os.makedirs(prompt_dir, exist_ok=True)
            prompt_rel = f"prompts/{k:05d}.txt"
            with open(os.path.join(out_dir, prompt_rel), "w", encoding="utf-8") as fh:
                fh.write(e.prompt + "\n")
        lines.append("\t".join(
            (rel, e.domain, e.split, prompt_rel, graph_hash(e.graph))
        ))
    manifest = os.path.join(out_dir, "manifest.tsv")
    with open(manifest, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return manifest


def read_corpus(manifest_path) -> Corpus:
    """Load a manifest written by `write_corpus`, verifying graph hashes."""
    base = os.path.dirname(os.path.abspath(str(manifest_path)))
    with open(manifest_path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != MANIFEST_HEADER:
        raise ValueError(f"{manifest_path}: not a corpus manifest")
    entries = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 5:
            raise ValueError(f"{manifest_path}:{lineno}: expected 5 tab-separated fields")
        rel, dom, split_name, prompt_rel, digest = parts
        g = read_edgelist(os.path.join(base, rel))
        if graph_hash(g) != digest:
            raise ValueError(f"{manifest_path}:{lineno}: hash mismatch for {rel}")
        prompt = None
        if prompt_rel != "-":
            with open(os.path.join(base, prompt_rel), "r", encoding="utf-8") as fh:
                prompt = fh.read().rstrip("\n")
        entries.append(CorpusEntry(g, dom, split_name, prompt))
    if not entries:
        raise ValueError(f"{manifest_path}: manifest lists no graphs")
    return Corpus(entries[0].graph.space, tuple(entries))
