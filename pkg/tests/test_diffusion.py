import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphdiffuse.diffusion import (
    DOMAIN_SPECIFIC,
    MARGINAL,
    UNIFORM,
    NoiseSchedule,
    TransitionModel,
    cosine_schedule,
    fit_marginals,
    forward_sample,
    posterior_step,
    q_bar,
    q_step,
    stationary_graph,
)
from graphdiffuse.graphs import CategorySpace, Graph, SoftGraph, graph_from_categories, new_graph
from helpers import complete_graph


def random_schedule(rng: np.random.Generator, n_steps: int) -> NoiseSchedule:
    alpha = np.ones(n_steps + 1)
    alpha[1:] = rng.uniform(0.05, 0.98, size=n_steps)
    alpha_bar = np.ones(n_steps + 1)
    alpha_bar[1:] = np.cumprod(alpha[1:])
    return NoiseSchedule(n_steps, alpha, alpha_bar)


# Frozen from a direct evaluation of the cosine-squared formula with
# offset 0.008 at T = 10 (raw ratio floored at 1e-4).
COSINE_T10_ALPHA = [
    0.972092737114,
    0.924506362703,
    0.875604013631,
    0.822810474598,
    0.762718469809,
    0.690116559891,
    0.595996856960,
    0.463001822357,
    0.256170633105,
    0.000100000000,
]


def test_cosine_schedule_matches_direct_evaluation():
    sched = cosine_schedule(10)
    assert np.allclose(sched.alpha[1:], COSINE_T10_ALPHA, atol=1e-10)


@pytest.mark.parametrize("T", [1, 2, 10, 500])
def test_cosine_schedule_invariants(T):
    sched = cosine_schedule(T)
    assert sched.alpha[0] == 1.0 and sched.alpha_bar[0] == 1.0
    assert np.all(sched.alpha[1:] > 0) and np.all(sched.alpha[1:] <= 1)
    assert np.all(np.diff(sched.alpha_bar) < 0)
    assert sched.alpha_bar[T] <= 0.01


def test_schedule_validation():
    with pytest.raises(ValueError, match="strictly decreasing"):
        NoiseSchedule(2, np.array([1.0, 1.0, 1.0]), np.array([1.0, 1.0, 1.0]))
    with pytest.raises(ValueError, match="running product"):
        NoiseSchedule(1, np.array([1.0, 0.5]), np.array([1.0, 0.4]))


def uniform_tm(schedule, d_x=1, d_e=2) -> TransitionModel:
    space = CategorySpace(d_x, d_e)
    node_mix = np.full(d_x, 1.0 / d_x)
    edge_mix = np.full(d_e, 1.0 / d_e)
    return TransitionModel(UNIFORM, space, schedule, node_mix, edge_mix)


def test_q_step_half_alpha_uniform():
    sched = NoiseSchedule(1, np.array([1.0, 0.5]), np.array([1.0, 0.5]))
    tm = uniform_tm(sched, d_x=2, d_e=2)
    Qx, Qe = q_step(tm, 1)
    expected = np.array([[0.75, 0.25], [0.25, 0.75]])
    assert np.allclose(Qx, expected, atol=1e-15)
    assert np.allclose(Qe, expected, atol=1e-15)


def test_fit_marginals_triangle_counts_diagonal_as_no_edge():
    sched = cosine_schedule(4)
    tm = fit_marginals([complete_graph(3)], sched, kind=MARGINAL)
    assert np.allclose(tm.edge_mix, [3.0 / 9.0, 6.0 / 9.0], atol=1e-15)
    assert np.allclose(tm.node_mix, [1.0], atol=1e-15)


def test_fit_marginals_uniform_ignores_corpus():
    sched = cosine_schedule(4)
    tm = fit_marginals([complete_graph(3)], sched, kind=UNIFORM)
    assert np.allclose(tm.edge_mix, [0.5, 0.5])


def test_fit_marginals_domain_specific():
    sched = cosine_schedule(4)
    dense = complete_graph(4)
    sparse = new_graph(4, [(0, 1)])
    tm = fit_marginals([dense, sparse], sched, kind=DOMAIN_SPECIFIC,
                       domains=["dense", "sparse"])
    nm_d, em_d = tm.mixes_for("dense")
    nm_s, em_s = tm.mixes_for("sparse")
    assert em_d[1] > em_s[1]
    # unknown domains fall back to the pooled mix
    nm_u, em_u = tm.mixes_for("never-seen")
    assert np.allclose(em_u, tm.edge_mix)
    pooled = (12 + 2) / 32.0
    assert em_u[1] == pytest.approx(pooled)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_transition_rows_are_stochastic(seed):
    rng = np.random.default_rng(seed)
    T = int(rng.integers(1, 12))
    sched = random_schedule(rng, T)
    d_e = int(rng.integers(2, 5))
    mix = rng.dirichlet(np.ones(d_e))
    tm = TransitionModel(MARGINAL, CategorySpace(1, d_e), sched,
                         np.array([1.0]), mix)
    t = int(rng.integers(1, T + 1))
    for Q in (*q_step(tm, t), *q_bar(tm, t)):
        assert np.abs(Q.sum(axis=1) - 1.0).max() <= 1e-12
        assert (Q >= 0).all()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_q_bar_matches_explicit_product(seed):
    rng = np.random.default_rng(seed)
    T = int(rng.integers(1, 40))
    sched = random_schedule(rng, T)
    d_e = int(rng.integers(2, 5))
    mix = rng.dirichlet(np.ones(d_e))
    tm = TransitionModel(MARGINAL, CategorySpace(1, d_e), sched,
                         np.array([1.0]), mix)
    prod = np.eye(d_e)
    for t in range(1, T + 1):
        prod = prod @ q_step(tm, t)[1]
        closed = q_bar(tm, t)[1]
        assert np.abs(closed - prod).max() <= 1e-10


def test_forward_sample_step_zero_is_identity():
    g = complete_graph(4)
    tm = fit_marginals([g], cosine_schedule(8), kind=MARGINAL)
    out = forward_sample(g, tm, 0, rng=3)
    assert np.array_equal(out.pair_onehot, g.pair_onehot)


def test_forward_sample_terminal_step_near_stationary():
    g = new_graph(6, [(0, 1), (1, 2), (2, 3)])
    tm = fit_marginals([g], cosine_schedule(200), kind=MARGINAL)
    rng = np.random.default_rng(7)
    hits = 0
    draws = 1500
    for _ in range(draws):
        out = forward_sample(g, tm, 200, rng)
        hits += int(out.pair_onehot[0, 1, 1])
    freq = hits / draws
    assert abs(freq - tm.edge_mix[1]) < 0.05


def test_stationary_graph_matches_mix():
    tm = fit_marginals([complete_graph(3)], cosine_schedule(10), kind=MARGINAL)
    rng = np.random.default_rng(5)
    dens = np.mean([
        stationary_graph(8, tm, rng).n_edges / 28.0 for _ in range(400)
    ])
    assert abs(dens - tm.edge_mix[1]) < 0.05


def brute_force_posterior(schedule, mix, t, clean_probs, observed):
    """Bayes by explicit chain products: joint over (prev, now) conditioned
    on the observation, one clean category at a time."""
    d = mix.shape[0]
    steps = [
        schedule.alpha[k] * np.eye(d)
        + (1 - schedule.alpha[k]) * np.outer(np.ones(d), mix)
        for k in range(1, schedule.n_steps + 1)
    ]
    bar_prev = np.eye(d)
    for k in range(1, t):
        bar_prev = bar_prev @ steps[k - 1]
    Qt = steps[t - 1]
    mixed = np.zeros(d)
    for k0 in range(d):
        joint = np.array([bar_prev[k0, j] * Qt[j, observed] for j in range(d)])
        z = joint.sum()
        if z > 0:
            mixed += clean_probs[k0] * joint / z
    return mixed / mixed.sum()


def one_node_graph(cat: int, d_x: int) -> Graph:
    space = CategorySpace(d_x, 2)
    return graph_from_categories(np.array([cat]), np.zeros((1, 1), dtype=int), space)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_posterior_matches_brute_force_bayes(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 5))
    T = int(rng.integers(1, 10))
    sched = random_schedule(rng, T)
    mix = rng.dirichlet(np.ones(d))
    space = CategorySpace(d, 2)
    tm = TransitionModel(MARGINAL, space, sched, mix, np.array([0.5, 0.5]))
    t = int(rng.integers(1, T + 1))
    observed = int(rng.integers(0, d))
    clean = rng.dirichlet(np.ones(d))
    g_t = one_node_graph(observed, d)
    soft_clean = SoftGraph(space, clean[None, :],
                           np.array([[[1.0, 0.0]]]))
    got = posterior_step(g_t, soft_clean, tm, t).node_probs[0]
    want = brute_force_posterior(sched, mix, t, clean, observed)
    assert np.abs(got - want).max() <= 1e-10


def test_posterior_with_onehot_clean_graph():
    rng = np.random.default_rng(11)
    sched = random_schedule(rng, 6)
    mix = np.array([0.3, 0.7])
    space = CategorySpace(2, 2)
    tm = TransitionModel(MARGINAL, space, sched, mix, np.array([0.5, 0.5]))
    g_t = one_node_graph(1, 2)
    g0 = one_node_graph(0, 2)
    got = posterior_step(g_t, g0, tm, 4).node_probs[0]
    want = brute_force_posterior(sched, mix, 4, np.array([1.0, 0.0]), 1)
    assert np.abs(got - want).max() <= 1e-10


def test_posterior_final_step_returns_compatible_clean():
    # with strictly positive transitions, the step-1 posterior is exactly
    # the predicted clean distribution
    sched = NoiseSchedule(1, np.array([1.0, 0.6]), np.array([1.0, 0.6]))
    space = CategorySpace(3, 2)
    tm = TransitionModel(MARGINAL, space, sched,
                         np.array([0.2, 0.5, 0.3]), np.array([0.5, 0.5]))
    g_t = one_node_graph(2, 3)
    clean = np.array([[0.1, 0.6, 0.3]])
    soft = SoftGraph(space, clean, np.array([[[1.0, 0.0]]]))
    got = posterior_step(g_t, soft, tm, 1).node_probs[0]
    assert np.allclose(got, clean[0], atol=1e-12)


def test_posterior_impossible_slot_raises():
    sched = NoiseSchedule(1, np.array([1.0, 0.5]), np.array([1.0, 0.5]))
    space = CategorySpace(2, 2)
    # category 1 has zero stationary mass, so observing it at t=1 from a
    # clean point mass on category 0 is unreachable
    tm = TransitionModel(MARGINAL, space, sched,
                         np.array([1.0, 0.0]), np.array([0.5, 0.5]))
    g_t = one_node_graph(1, 2)
    g0 = one_node_graph(0, 2)
    with pytest.raises(ValueError, match="node slot"):
        posterior_step(g_t, g0, tm, 1)


def test_posterior_edge_slots_and_diagonal():
    g0 = complete_graph(3)
    tm = fit_marginals([g0], cosine_schedule(12), kind=MARGINAL)
    g_t = forward_sample(g0, tm, 6, rng=2)
    post = posterior_step(g_t, g0, tm, 6)
    assert post.pair_probs.shape == (3, 3, 2)
    assert np.allclose(post.pair_probs[0, 0], [1.0, 0.0])
    assert np.allclose(post.pair_probs, post.pair_probs.transpose(1, 0, 2))
