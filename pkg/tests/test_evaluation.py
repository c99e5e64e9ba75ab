import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from graphdiffuse.evaluation import (
    DESCRIPTOR_NAMES,
    MmdConfig,
    clustering_descriptor,
    degree_descriptor,
    mmd,
    mmd_report,
    orbit_descriptor,
    spectrum_descriptor,
)
from graphdiffuse.synth import WsSpec, er_graph, watts_strogatz
from helpers import complete_graph, random_graph


def test_degree_descriptor_triangle():
    g = complete_graph(3)
    np.testing.assert_allclose(degree_descriptor(g), [0.0, 0.0, 1.0])


def test_degree_descriptor_sums_to_one():
    rng = np.random.default_rng(7)
    g = random_graph(rng, 15, 0.3)
    d = degree_descriptor(g)
    assert d.sum() == pytest.approx(1.0)
    assert (d >= 0).all()


def test_clustering_descriptor_complete_graph_mass_at_one():
    d = clustering_descriptor(complete_graph(5), bins=100)
    assert d[-1] == pytest.approx(1.0)
    assert d[:-1].sum() == 0.0


def test_spectrum_descriptor_shape_and_mass():
    rng = np.random.default_rng(8)
    g = random_graph(rng, 12, 0.4)
    d = spectrum_descriptor(g, bins=200)
    assert d.shape == (200,)
    assert d.sum() == pytest.approx(1.0)


def test_orbit_descriptor_triangle_free_graph_is_zero_for_triangle_orbits():
    rng = np.random.default_rng(9)
    g = random_graph(rng, 10, 0.25)
    d = orbit_descriptor(g)
    assert d.shape == (11,)
    assert d.sum() == pytest.approx(1.0) or d.sum() == 0.0


def test_mmd_of_identical_sets_is_tiny():
    rng = np.random.default_rng(11)
    vecs = [rng.random(6) for _ in range(8)]
    assert abs(mmd(vecs, vecs)) <= 1e-9


def test_mmd_symmetry_is_bit_exact():
    rng = np.random.default_rng(12)
    xs = [rng.random(5) for _ in range(7)]
    ys = [rng.random(5) for _ in range(4)]
    assert mmd(xs, ys) == mmd(ys, xs)


def test_mmd_nonnegative():
    rng = np.random.default_rng(13)
    for trial in range(20):
        xs = [rng.random(4) for _ in range(3)]
        ys = [rng.random(4) for _ in range(5)]
        assert mmd(xs, ys) >= -1e-9


def test_mmd_two_singletons_closed_form():
    x = np.array([0.2, 0.5, 0.3])
    y = np.array([0.6, 0.1, 0.3])
    d = float(((x - y) ** 2).sum())
    expected = 2.0 - 2.0 * math.exp(-d / 2.0)
    assert mmd([x], [y]) == pytest.approx(expected, abs=1e-12)


def test_mmd_two_singletons_closed_form_tv():
    cfg = MmdConfig(distance="tv")
    x = np.array([0.7, 0.3])
    y = np.array([0.2, 0.8])
    d = 0.5 * float(np.abs(x - y).sum())
    expected = 2.0 - 2.0 * math.exp(-d / 2.0)
    assert mmd([x], [y], cfg) == pytest.approx(expected, abs=1e-12)


def test_mmd_pads_ragged_vectors():
    xs = [np.array([1.0]), np.array([0.5, 0.5])]
    ys = [np.array([0.25, 0.25, 0.5])]
    value = mmd(xs, ys)
    assert np.isfinite(value)
    assert value >= -1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_mmd_separates_more_distant_sets(seed):
    rng = np.random.default_rng(seed)
    base = rng.random(5)
    near = [base + 1e-3 * rng.random(5) for _ in range(4)]
    far = [base + 1.5 + rng.random(5) for _ in range(4)]
    ref = [base + 1e-3 * rng.random(5) for _ in range(4)]
    assert mmd(ref, far) > mmd(ref, near)


def test_report_covers_all_descriptors_and_separates_ws_from_er():
    rng = np.random.default_rng(42)
    ws = [watts_strogatz(WsSpec(24, 6, 0.1), rng) for _ in range(12)]
    # Density-matched Erdos-Renyi: same node count, edge probability k/(n-1).
    er = [er_graph(24, 6 / 23, rng) for _ in range(12)]
    report = mmd_report(ws, er)
    assert set(report.values) == set(DESCRIPTOR_NAMES)
    self_report = mmd_report(ws, ws)
    for name, value in report.rows():
        assert value > self_report.values[name]
    assert report.values["degree"] > 0.01
    assert report.values["clustering"] > 0.01


def test_report_rejects_empty_sets():
    with pytest.raises(ValueError, match="non-empty"):
        mmd_report([], [complete_graph(3)])


def test_mmd_config_validation():
    with pytest.raises(ValueError, match="sigma"):
        MmdConfig(sigma=0.0)
    with pytest.raises(ValueError, match="distance"):
        MmdConfig(distance="cosine")
