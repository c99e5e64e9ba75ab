import numpy as np
import pytest

from graphdiffuse.corpus import (
    Corpus,
    CorpusEntry,
    corpus_hash,
    domain_stats,
    draw_node_count,
    ego_sample,
    parse_matrix_market,
    read_corpus,
    split,
    write_corpus,
)
from graphdiffuse.graphs import adjacency, degree_vector, graph_hash, is_connected, new_graph
from helpers import complete_graph, path_graph, random_graph, star_graph

STAR_MTX = """%%MatrixMarket matrix coordinate pattern symmetric
% 5-node star
5 5 4
2 1
3 1
4 1
5 1
"""


def test_parse_matrix_market_star():
    g = parse_matrix_market(STAR_MTX)
    assert g.n_nodes == 5
    assert g.n_edges == 4
    assert list(degree_vector(g)) == [4, 1, 1, 1, 1]
    # categories are forced to 1
    assert set(np.unique(g.pair_onehot.argmax(axis=2))) == {0, 1}


def test_parse_matrix_market_drops_loops_and_dupes():
    text = ("%%MatrixMarket matrix coordinate pattern general\n"
            "3 3 4\n1 1\n1 2\n2 1\n2 3\n")
    g = parse_matrix_market(text)
    assert g.n_edges == 2


def test_parse_matrix_market_rejects_non_square():
    text = "%%MatrixMarket matrix coordinate pattern general\n3 4 1\n1 2\n"
    with pytest.raises(ValueError, match="square"):
        parse_matrix_market(text)


def test_parse_matrix_market_rejects_bad_banner():
    with pytest.raises(ValueError, match="banner"):
        parse_matrix_market("1 2 3\n")


def test_ego_sample_star_whole_graph():
    star = star_graph(4)
    res = ego_sample(star, hops=1, max_nodes=10, count=1, rng=0, center=0)
    assert res.shortfall == 0
    (sub,) = res.graphs
    assert sub.n_nodes == 5 and sub.n_edges == 4


def test_ego_sample_path_two_hops():
    # path 0-1-2-3-4-5-6, center 3, 2 hops -> induced path on 1..5
    g = path_graph(7)
    res = ego_sample(g, hops=2, max_nodes=10, count=1, rng=0, center=3)
    (sub,) = res.graphs
    assert sub.n_nodes == 5
    assert sub.n_edges == 4
    assert graph_hash(sub) == graph_hash(path_graph(5))


def test_ego_sample_truncation_keeps_connectivity_and_size():
    rng = np.random.default_rng(3)
    g = random_graph(rng, 30, 0.15)
    res = ego_sample(g, hops=2, max_nodes=2, count=5, rng=1)
    for sub in res.graphs:
        assert sub.n_nodes == 2
        assert sub.n_edges == 1


def test_ego_sample_outputs_connected():
    rng = np.random.default_rng(9)
    g = random_graph(rng, 40, 0.1)
    res = ego_sample(g, hops=3, max_nodes=12, count=8, rng=4)
    assert res.graphs
    for sub in res.graphs:
        assert is_connected(sub)
        assert sub.n_nodes <= 12


def test_ego_sample_deduplicates_and_reports_shortfall():
    star = star_graph(3)
    # only one distinct ball exists around the forced center
    res = ego_sample(star, hops=1, max_nodes=10, count=3, rng=0, center=0)
    assert len(res.graphs) == 1
    assert res.shortfall == 2
    assert res.duplicates > 0


def test_split_ratios_within_one_graph():
    items = [(complete_graph(3), "a") for _ in range(10)]
    items += [(path_graph(4), "b") for _ in range(7)]
    corpus = split(items, (0.8, 0.1, 0.1), rng=0)
    for dom, total in (("a", 10), ("b", 7)):
        for name, ratio in zip(("train", "val", "test"), (0.8, 0.1, 0.1)):
            got = len(corpus.select(name, dom))
            assert abs(got - total * ratio) <= 1.0
    assert len(corpus.entries) == 17


def test_split_is_deterministic():
    items = [(random_graph(np.random.default_rng(i), 6, 0.5), "d") for i in range(8)]
    a = split(items, rng=42)
    b = split(items, rng=42)
    assert [e.split for e in a.entries] == [e.split for e in b.entries]
    assert corpus_hash(a) == corpus_hash(b)


def test_split_rejects_thin_domains():
    items = [(complete_graph(3), "ok")] * 3 + [(path_graph(3), "thin")] * 2
    with pytest.raises(ValueError, match="thin"):
        split(items)


def test_corpus_requires_train_graph_per_domain():
    g = complete_graph(3)
    with pytest.raises(ValueError, match="without a train graph"):
        Corpus(g.space, (CorpusEntry(g, "d", "val"),))


def test_domain_stats_k3_k4():
    items = [(complete_graph(3), "mix"), (complete_graph(4), "mix"),
             (complete_graph(3), "mix")]
    corpus = split(items, (0.8, 0.1, 0.1), rng=0)
    (row,) = domain_stats(corpus)
    assert row.n_graphs == 3
    # population std over {3, 4, 3}
    assert row.nodes_mean == pytest.approx(10 / 3)
    assert row.nodes_std == pytest.approx(np.std([3, 4, 3]))
    assert row.clustering_mean == pytest.approx(1.0)


def test_domain_stats_two_graph_example():
    g3, g4 = complete_graph(3), complete_graph(4)
    corpus = Corpus(g3.space, (
        CorpusEntry(g3, "d", "train"), CorpusEntry(g4, "d", "train")))
    (row,) = domain_stats(corpus)
    assert row.nodes_mean == pytest.approx(3.5)
    assert row.nodes_std == pytest.approx(0.5)


def test_draw_node_count_uses_train_histogram():
    corpus = Corpus(complete_graph(5).space, (
        CorpusEntry(complete_graph(5), "d", "train"),
        CorpusEntry(complete_graph(9), "d", "test"),
    ))
    rng = np.random.default_rng(0)
    draws = {draw_node_count(corpus, rng, "d") for _ in range(20)}
    assert draws == {5}


def test_corpus_round_trip(tmp_path):
    items = [(random_graph(np.random.default_rng(i), 5 + i % 3, 0.5), "dom",
              f"prompt {i}") for i in range(6)]
    corpus = split(items, rng=1)
    manifest = write_corpus(corpus, tmp_path / "c")
    back = read_corpus(manifest)
    assert corpus_hash(back) == corpus_hash(corpus)
    assert [e.prompt for e in back.entries] == [e.prompt for e in corpus.entries]


def test_read_corpus_detects_tampering(tmp_path):
    items = [(complete_graph(3), "d")] * 4
    manifest = write_corpus(split(items, rng=0), tmp_path / "c")
    victim = tmp_path / "c" / "graphs" / "00000.edgelist"
    victim.write_text("3 1 2\n0 1 1\n")
    with pytest.raises(ValueError, match="hash mismatch"):
        read_corpus(manifest)
