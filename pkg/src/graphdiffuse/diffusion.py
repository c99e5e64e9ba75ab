"""Forward noising process and its exact single-step posterior.

Each node slot and each unordered pair slot evolves independently under a
categorical Markov chain.  The one-step transition matrix at step t is

    Q[t] = alpha[t] * I + (1 - alpha[t]) * ones @ mix^T

where ``mix`` is the stationary category distribution, so a slot either keeps
its category or resamples from ``mix``.  Because every Q[t] shares the same
rank-one structure, the t-step product collapses to the same form with
alpha replaced by its running product, which is what `q_bar` returns.

The reverse direction uses the closed-form conditional

    P(prev = j | now = c, clean = k) ∝ Qbar[t-1][k, j] * Q[t][j, c]

and, when the clean slot is only known as a distribution, mixes these
normalized conditionals weighted by that distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graphs import CategorySpace, Graph, SoftGraph, graph_from_categories
from .rng import as_generator

__all__ = [
    "UNIFORM",
    "MARGINAL",
    "DOMAIN_SPECIFIC",
    "TRANSITION_KINDS",
    "NoiseSchedule",
    "TransitionModel",
    "cosine_schedule",
    "uniform_transition",
    "fit_marginals",
    "q_step",
    "q_bar",
    "forward_sample",
    "posterior_step",
    "stationary_graph",
    "sample_graph",
]

UNIFORM = "uniform"
MARGINAL = "marginal"
DOMAIN_SPECIFIC = "domain_specific"
TRANSITION_KINDS = (UNIFORM, MARGINAL, DOMAIN_SPECIFIC)

_ALPHA_FLOOR = 1e-4


@dataclass(frozen=True)
class NoiseSchedule:
    """Retention coefficients alpha[1..T] and their running products.

    Arrays have length T + 1 so they can be indexed directly by step; index 0
    holds the no-noise values alpha[0] = alpha_bar[0] = 1.
    """

    n_steps: int
    alpha: np.ndarray
    alpha_bar: np.ndarray

    def __post_init__(self) -> None:
        T = self.n_steps
        if T < 1:
            raise ValueError(f"schedule needs at least one step, got {T}")
        a = np.asarray(self.alpha, dtype=np.float64)
        ab = np.asarray(self.alpha_bar, dtype=np.float64)
        if a.shape != (T + 1,) or ab.shape != (T + 1,):
            raise ValueError(f"schedule arrays must have length {T + 1}")
        if a[0] != 1.0 or ab[0] != 1.0:
            raise ValueError("alpha[0] and alpha_bar[0] must be 1")
        if (a <= 0).any() or (a > 1).any():
            raise ValueError("alpha values must lie in (0, 1]")
        if (np.diff(ab) >= 0).any():
            raise ValueError("alpha_bar must be strictly decreasing")
        if np.abs(ab[1:] - ab[:-1] * a[1:]).max() > 1e-12:
            raise ValueError("alpha_bar must equal the running product of alpha")
        a = a.copy()
        ab = ab.copy()
        a.flags.writeable = False
        ab.flags.writeable = False
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "alpha_bar", ab)


def cosine_schedule(n_steps: int = 500, offset: float = 0.008) -> NoiseSchedule:
    """Cosine-squared retention schedule.

    The raw curve is cos^2(0.5 * pi * (t/T + offset) / (1 + offset)) scaled so
    the step-0 value is 1.  The per-step ratio hits exactly 0 at t = T, so it
    is floored at 1e-4 to keep every alpha strictly positive.  The terminal
    alpha_bar is at most 0.01 for every T, meaning the chain ends essentially
    at its stationary distribution.
    """
    T = int(n_steps)
    if T < 1:
        raise ValueError(f"n_steps must be >= 1, got {T}")
    t = np.arange(T + 1, dtype=np.float64)
    raw = np.cos(0.5 * math.pi * (t / T + offset) / (1.0 + offset)) ** 2
    raw /= raw[0]
    alpha = np.ones(T + 1)
    alpha[1:] = np.clip(raw[1:] / raw[:-1], _ALPHA_FLOOR, 1.0)
    alpha_bar = np.ones(T + 1)
    alpha_bar[1:] = np.cumprod(alpha[1:])
    sched = NoiseSchedule(n_steps=T, alpha=alpha, alpha_bar=alpha_bar)
    if sched.alpha_bar[T] > 0.01:
        raise AssertionError("cosine schedule failed to reach the stationary mix")
    return sched


def _validate_mix(mix: np.ndarray, d: int, what: str) -> np.ndarray:
    m = np.asarray(mix, dtype=np.float64)
    if m.shape != (d,):
        raise ValueError(f"{what} mix must have shape ({d},), got {m.shape}")
    if (m < 0).any() or abs(float(m.sum()) - 1.0) > 1e-9:
        raise ValueError(f"{what} mix must be a probability vector")
    return m


@dataclass(frozen=True)
class TransitionModel:
    """Noise kind plus the stationary category mixes it converges to.

    ``kind`` selects where the mixes come from: "uniform" ignores the corpus,
    "marginal" pools category frequencies over every training slot, and
    "domain_specific" additionally keeps one mix per domain (the pooled mix
    stays around as the fallback for unknown domains, which is what zero-shot
    sampling of a held-out domain uses).
    """

    kind: str
    space: CategorySpace
    schedule: NoiseSchedule
    node_mix: np.ndarray
    edge_mix: np.ndarray
    domain_node_mix: dict | None = None
    domain_edge_mix: dict | None = None

    def __post_init__(self) -> None:
        if self.kind not in TRANSITION_KINDS:
            raise ValueError(f"unknown transition kind {self.kind!r}")
        nm = _validate_mix(self.node_mix, self.space.n_node_categories, "node")
        em = _validate_mix(self.edge_mix, self.space.n_edge_categories, "edge")
        nm.flags.writeable = False
        em.flags.writeable = False
        object.__setattr__(self, "node_mix", nm)
        object.__setattr__(self, "edge_mix", em)
        if self.kind == DOMAIN_SPECIFIC:
            if not self.domain_node_mix or not self.domain_edge_mix:
                raise ValueError("domain_specific kind requires per-domain mixes")
            for dom in self.domain_node_mix:
                _validate_mix(self.domain_node_mix[dom],
                              self.space.n_node_categories, f"node[{dom}]")
                _validate_mix(self.domain_edge_mix[dom],
                              self.space.n_edge_categories, f"edge[{dom}]")

    def mixes_for(self, domain: str | None) -> tuple[np.ndarray, np.ndarray]:
        if (
            self.kind == DOMAIN_SPECIFIC
            and domain is not None
            and domain in self.domain_node_mix
        ):
            return (
                np.asarray(self.domain_node_mix[domain], dtype=np.float64),
                np.asarray(self.domain_edge_mix[domain], dtype=np.float64),
            )
        return self.node_mix, self.edge_mix


def _pool_counts(graphs) -> tuple[np.ndarray, np.ndarray, int, int]:
    first = graphs[0]
    node_counts = np.zeros(first.space.n_node_categories, dtype=np.float64)
    edge_counts = np.zeros(first.space.n_edge_categories, dtype=np.float64)
    n_node_slots = 0
    n_pair_slots = 0
    for g in graphs:
        node_counts += g.node_onehot.sum(axis=0)
        edge_counts += g.pair_onehot.sum(axis=(0, 1))
        n_node_slots += g.n_nodes
        n_pair_slots += g.n_nodes * g.n_nodes
    return node_counts, edge_counts, n_node_slots, n_pair_slots


def uniform_transition(space: CategorySpace, schedule: NoiseSchedule) -> TransitionModel:
    """Transition model with flat stationary mixes; needs no training data."""
    node_mix = np.full(space.n_node_categories, 1.0 / space.n_node_categories)
    edge_mix = np.full(space.n_edge_categories, 1.0 / space.n_edge_categories)
    return TransitionModel(UNIFORM, space, schedule, node_mix, edge_mix)


def fit_marginals(
    graphs,
    schedule: NoiseSchedule,
    kind: str = MARGINAL,
    domains=None,
) -> TransitionModel:
    """Estimate stationary mixes from training graphs.

    Edge frequencies are taken over all n^2 pair slots of each graph, with
    the diagonal counting toward category 0, so the no-edge mass reflects
    graph density directly.  For ``domain_specific`` a parallel sequence of
    domain labels is required.
    """
    graphs = list(graphs)
    if not graphs:
        raise ValueError("cannot fit a transition model on an empty training set")
    space = graphs[0].space
    for g in graphs:
        if g.space != space:
            raise ValueError("all graphs must share one category space")
    if kind == UNIFORM:
        node_mix = np.full(space.n_node_categories, 1.0 / space.n_node_categories)
        edge_mix = np.full(space.n_edge_categories, 1.0 / space.n_edge_categories)
        return TransitionModel(kind, space, schedule, node_mix, edge_mix)
    node_counts, edge_counts, n_nodes, n_pairs = _pool_counts(graphs)
    node_mix = node_counts / n_nodes
    edge_mix = edge_counts / n_pairs
    if kind == MARGINAL:
        return TransitionModel(kind, space, schedule, node_mix, edge_mix)
    if kind != DOMAIN_SPECIFIC:
        raise ValueError(f"unknown transition kind {kind!r}")
    if domains is None:
        raise ValueError("domain_specific fitting needs a domain per graph")
    domains = list(domains)
    if len(domains) != len(graphs):
        raise ValueError("domains must parallel the graph sequence")
    dom_node: dict = {}
    dom_edge: dict = {}
    for dom in sorted(set(domains)):
        members = [g for g, d in zip(graphs, domains) if d == dom]
        nc, ec, nn, np_ = _pool_counts(members)
        dom_node[dom] = nc / nn
        dom_edge[dom] = ec / np_
    return TransitionModel(kind, space, schedule, node_mix, edge_mix,
                           domain_node_mix=dom_node, domain_edge_mix=dom_edge)


def _rank_one_step(alpha: float, mix: np.ndarray) -> np.ndarray:
    d = mix.shape[0]
    return alpha * np.eye(d) + (1.0 - alpha) * np.tile(mix, (d, 1))


def _check_step(tm: TransitionModel, t: int, lowest: int = 1) -> None:
    if not (lowest <= t <= tm.schedule.n_steps):
        raise ValueError(
            f"step {t} outside {lowest}..{tm.schedule.n_steps} for this schedule"
        )


def q_step(tm: TransitionModel, t: int, domain: str | None = None
           ) -> tuple[np.ndarray, np.ndarray]:
    """One-step transition matrices (node, edge) at step t, rows stochastic."""
    _check_step(tm, t)
    node_mix, edge_mix = tm.mixes_for(domain)
    a = float(tm.schedule.alpha[t])
    return _rank_one_step(a, node_mix), _rank_one_step(a, edge_mix)


def q_bar(tm: TransitionModel, t: int, domain: str | None = None
          ) -> tuple[np.ndarray, np.ndarray]:
    """Accumulated transition matrices from step 0 to t (t = 0 gives I)."""
    _check_step(tm, t, lowest=0)
    node_mix, edge_mix = tm.mixes_for(domain)
    ab = float(tm.schedule.alpha_bar[t])
    return _rank_one_step(ab, node_mix), _rank_one_step(ab, edge_mix)


def _sample_rows(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draw per row of a (m, d) row-stochastic array."""
    cum = np.cumsum(probs, axis=1)
    cum[:, -1] = 1.0
    u = rng.random(probs.shape[0])
    return (u[:, None] > cum).sum(axis=1).astype(np.int64)


def forward_sample(
    g0: Graph,
    tm: TransitionModel,
    t: int,
    rng: np.random.Generator | int,
    domain: str | None = None,
) -> Graph:
    """Draw a noisy graph at step t given the clean graph.

    Node slots and the unordered pair slots are drawn independently from the
    rows selected by the clean categories in the accumulated transition; the
    lower triangle mirrors the upper and the diagonal stays category 0.
    """
    rng = as_generator(rng)
    _check_step(tm, t, lowest=0)
    Qx, Qe = q_bar(tm, t, domain)
    n = g0.n_nodes
    node_probs = g0.node_onehot.astype(np.float64) @ Qx
    node_cats = _sample_rows(node_probs, rng)
    iu, ju = np.triu_indices(n, k=1)
    pair_cats = np.zeros((n, n), dtype=np.int64)
    if iu.size:
        edge_probs = g0.pair_onehot[iu, ju].astype(np.float64) @ Qe
        drawn = _sample_rows(edge_probs, rng)
        pair_cats[iu, ju] = drawn
        pair_cats[ju, iu] = drawn
    return graph_from_categories(node_cats, pair_cats, g0.space)


def stationary_graph(
    n: int,
    tm: TransitionModel,
    rng: np.random.Generator | int,
    domain: str | None = None,
) -> Graph:
    """Draw a graph whose slots are iid from the stationary mixes."""
    rng = as_generator(rng)
    node_mix, edge_mix = tm.mixes_for(domain)
    node_cats = _sample_rows(np.tile(node_mix, (n, 1)), rng)
    iu, ju = np.triu_indices(n, k=1)
    pair_cats = np.zeros((n, n), dtype=np.int64)
    if iu.size:
        drawn = _sample_rows(np.tile(edge_mix, (iu.size, 1)), rng)
        pair_cats[iu, ju] = drawn
        pair_cats[ju, iu] = drawn
    return graph_from_categories(node_cats, pair_cats, tm.space)


def sample_graph(soft: SoftGraph, rng: np.random.Generator | int) -> Graph:
    """Draw one hard graph from independent per-slot distributions.

    Node slots and upper-triangle pair slots are drawn independently; the
    lower triangle mirrors the upper and the diagonal stays category 0.
    """
    rng = as_generator(rng)
    n = soft.node_probs.shape[0]
    node_cats = _sample_rows(soft.node_probs, rng)
    iu, ju = np.triu_indices(n, k=1)
    pair_cats = np.zeros((n, n), dtype=np.int64)
    if iu.size:
        drawn = _sample_rows(soft.pair_probs[iu, ju], rng)
        pair_cats[iu, ju] = drawn
        pair_cats[ju, iu] = drawn
    return graph_from_categories(node_cats, pair_cats, soft.space)


def _posterior_table(Qt: np.ndarray, Qb_prev: np.ndarray) -> np.ndarray:
    """post[k, j, c] = P(prev = j | now = c, clean = k), zero rows kept zero."""
    d = Qt.shape[0]
    joint = Qb_prev[:, :, None] * Qt[None, :, :]  # (clean, prev, now)
    z = joint.sum(axis=1, keepdims=True)
    out = np.zeros_like(joint)
    np.divide(joint, z, out=out, where=z > 0)
    return out


def _mix_posterior(
    table: np.ndarray, clean_probs: np.ndarray, now_cats: np.ndarray, what: str
) -> np.ndarray:
    """Weight the per-clean-category posteriors by the clean distribution."""
    picked = table[:, :, now_cats]  # (clean, prev, slot)
    mixed = np.einsum("sk,kjs->sj", clean_probs, picked)
    total = mixed.sum(axis=1)
    dead = np.flatnonzero(total <= 0)
    if dead.size:
        raise ValueError(
            f"posterior normalizer is zero at {what} slot index {int(dead[0])}: "
            "the observed category cannot be reached from any clean category "
            "with positive weight"
        )
    return mixed / total[:, None]


def posterior_step(
    g_t: Graph,
    g0: Graph | SoftGraph,
    tm: TransitionModel,
    t: int,
    domain: str | None = None,
) -> SoftGraph:
    """Distribution of the step t-1 graph given the step t graph and a clean
    graph (exact) or a predicted clean distribution (mixed as a convex
    combination of the exact per-category posteriors).

    At t = 1 the result is the clean distribution itself, renormalized
    against compatibility with the observed step-1 categories.
    """
    _check_step(tm, t)
    if g_t.space != tm.space:
        raise ValueError("g_t category space does not match the transition model")
    n = g_t.n_nodes
    if g0.n_nodes != n:
        raise ValueError("g0 and g_t must have the same node count")
    if isinstance(g0, Graph):
        clean_node = g0.node_onehot.astype(np.float64)
        clean_pair = g0.pair_onehot.astype(np.float64)
    else:
        clean_node = np.asarray(g0.node_probs, dtype=np.float64)
        clean_pair = np.asarray(g0.pair_probs, dtype=np.float64)

    Qx_t, Qe_t = q_step(tm, t, domain)
    Qx_b, Qe_b = q_bar(tm, t - 1, domain)

    node_now = g_t.node_onehot.argmax(axis=1)
    node_post = _mix_posterior(
        _posterior_table(Qx_t, Qx_b), clean_node, node_now, "node"
    )

    d_e = tm.space.n_edge_categories
    pair_post = np.zeros((n, n, d_e), dtype=np.float64)
    pair_post[np.arange(n), np.arange(n), 0] = 1.0
    iu, ju = np.triu_indices(n, k=1)
    if iu.size:
        edge_now = g_t.pair_onehot[iu, ju].argmax(axis=1)
        upper = _mix_posterior(
            _posterior_table(Qe_t, Qe_b), clean_pair[iu, ju], edge_now, "edge"
        )
        pair_post[iu, ju] = upper
        pair_post[ju, iu] = upper
    return SoftGraph(tm.space, node_post, pair_post)
