import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphdiffuse.graphs import (
    CategorySpace,
    Graph,
    SoftGraph,
    adjacency,
    clustering_coefficient,
    degree_histogram,
    degree_vector,
    from_edgelist_text,
    graph_hash,
    graph_stats,
    laplacian_spectrum,
    new_graph,
    to_edgelist_text,
)
from helpers import complete_graph, path_graph, random_graph, star_graph


def test_new_graph_basic():
    g = new_graph(3, [(0, 1), (1, 2)])
    assert g.n_nodes == 3
    assert g.n_edges == 2
    A = adjacency(g)
    assert A[0, 1] and A[1, 0] and A[1, 2]
    assert not A[0, 2]
    assert list(degree_vector(g)) == [1, 2, 1]


def test_new_graph_rejects_self_loop():
    with pytest.raises(ValueError, match="self-loop"):
        new_graph(3, [(1, 1)])


def test_new_graph_rejects_duplicate_edge():
    with pytest.raises(ValueError, match="duplicate edge"):
        new_graph(3, [(0, 1), (1, 0)])


def test_new_graph_rejects_out_of_range():
    with pytest.raises(ValueError, match="outside"):
        new_graph(3, [(0, 3)])


def test_graph_validates_symmetry():
    space = CategorySpace()
    X = np.array([[1], [1]], dtype=np.uint8)
    E = np.zeros((2, 2, 2), dtype=np.uint8)
    E[:, :, 0] = 1
    E[0, 1] = (0, 1)  # edge one way only
    with pytest.raises(ValueError, match="asymmetric"):
        Graph(space, X, E)


def test_graph_validates_diagonal():
    space = CategorySpace()
    X = np.array([[1], [1]], dtype=np.uint8)
    E = np.zeros((2, 2, 2), dtype=np.uint8)
    E[:, :, 1] = 1
    with pytest.raises(ValueError, match="diagonal"):
        Graph(space, X, E)


def test_graph_is_immutable():
    g = new_graph(2, [(0, 1)])
    with pytest.raises(ValueError):
        g.node_onehot[0, 0] = 0


def test_degree_histogram_triangle():
    counts = degree_histogram(complete_graph(3))
    assert list(counts) == [0, 0, 3]


def test_clustering_triangle_and_star():
    assert np.allclose(clustering_coefficient(complete_graph(3)), 1.0)
    star = star_graph(4)
    assert np.allclose(clustering_coefficient(star), 0.0)


def test_clustering_low_degree_is_zero():
    g = path_graph(2)
    assert np.allclose(clustering_coefficient(g), 0.0)


def test_laplacian_spectrum_k3():
    spec = laplacian_spectrum(complete_graph(3))
    assert np.allclose(spec, [0.0, 1.5, 1.5], atol=1e-9)


def test_laplacian_spectrum_empty_graph():
    g = new_graph(3, [])
    assert np.allclose(laplacian_spectrum(g), [1.0, 1.0, 1.0], atol=1e-12)


def test_laplacian_spectrum_k2():
    assert np.allclose(laplacian_spectrum(complete_graph(2)), [0.0, 2.0], atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_laplacian_spectrum_bounds(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 14))
    g = random_graph(rng, n, float(rng.random()))
    spec = laplacian_spectrum(g)
    assert spec.shape == (n,)
    assert np.all(np.diff(spec) >= -1e-12)
    assert spec[0] >= -1e-9 and spec[-1] <= 2.0 + 1e-9
    if g.n_edges > 0:
        assert spec[0] <= 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_clustering_in_unit_interval(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, int(rng.integers(1, 16)), 0.4)
    cc = clustering_coefficient(g)
    assert np.all(cc >= 0.0) and np.all(cc <= 1.0 + 1e-12)


def test_edgelist_round_trip_plain():
    g = new_graph(4, [(0, 1), (2, 3), (1, 2)])
    text = to_edgelist_text(g)
    assert text.splitlines()[0] == "4 1 2"
    back = from_edgelist_text(text)
    assert np.array_equal(back.node_onehot, g.node_onehot)
    assert np.array_equal(back.pair_onehot, g.pair_onehot)


def test_edgelist_round_trip_with_categories():
    space = CategorySpace(n_node_categories=3, n_edge_categories=4)
    g = new_graph(5, [(0, 1, 2), (1, 2, 3), (3, 4, 1)], space,
                  node_categories=[0, 2, 1, 0, 2])
    back = from_edgelist_text(to_edgelist_text(g))
    assert np.array_equal(back.node_onehot, g.node_onehot)
    assert np.array_equal(back.pair_onehot, g.pair_onehot)
    assert graph_hash(back) == graph_hash(g)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_edgelist_round_trip_random(seed):
    rng = np.random.default_rng(seed)
    space = CategorySpace(n_node_categories=int(rng.integers(1, 4)),
                          n_edge_categories=int(rng.integers(2, 5)))
    g = random_graph(rng, int(rng.integers(0, 12)), 0.3, space)
    back = from_edgelist_text(to_edgelist_text(g))
    assert np.array_equal(back.node_onehot, g.node_onehot)
    assert np.array_equal(back.pair_onehot, g.pair_onehot)


def test_edgelist_parse_error_names_line():
    with pytest.raises(ValueError, match="line 2"):
        from_edgelist_text("3 1 2\n0 1\n")


def test_edgelist_missing_header():
    with pytest.raises(ValueError, match="header"):
        from_edgelist_text("")


def test_graph_stats_values():
    g = complete_graph(3)
    s = graph_stats(g)
    assert s.n_nodes == 3
    assert s.n_edges == 3
    assert s.avg_degree == pytest.approx(2.0)
    assert s.avg_clustering == pytest.approx(1.0)


def test_graph_hash_distinguishes():
    a = new_graph(3, [(0, 1)])
    b = new_graph(3, [(0, 2)])
    assert graph_hash(a) != graph_hash(b)
    assert graph_hash(a) == graph_hash(new_graph(3, [(0, 1)]))


def test_soft_graph_validation():
    space = CategorySpace()
    node = np.full((2, 1), 1.0)
    pair = np.zeros((2, 2, 2))
    pair[:, :, 0] = 1.0
    sg = SoftGraph(space, node, pair)
    assert sg.n_nodes == 2
    bad = pair.copy()
    bad[0, 1] = (0.3, 0.6)
    with pytest.raises(ValueError, match="sum to 1"):
        SoftGraph(space, node, bad)
