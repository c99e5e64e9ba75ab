import itertools

import numpy as np
import pytest

from graphdiffuse.text import (
    ENCODER_ID,
    EmbeddingStore,
    TextEncoder,
    encode_text,
    load_embeddings,
    render_domain_prompt,
    render_property_prompt,
    save_embeddings,
)


def test_domain_prompt_mentions_name_and_domain():
    p = render_domain_prompt("POWER", "power-1138-bus", rng=0)
    assert "power-1138-bus" in p
    assert "power" in p.lower()


def test_domain_prompt_unknown_domain_falls_back():
    p = render_domain_prompt("XYZ", "mystery-graph", rng=0)
    assert "mystery-graph" in p
    assert "XYZ" in p


def test_domain_prompt_has_multiple_phrasings():
    seen = {render_domain_prompt("fb", "fb-pages", rng=seed) for seed in range(30)}
    assert len(seen) >= 3


def test_domain_prompt_is_deterministic():
    a = render_domain_prompt("road", "road-minnesota", rng=7)
    b = render_domain_prompt("road", "road-minnesota", rng=7)
    assert a == b


def test_property_prompt_contains_exact_decimals():
    p = render_property_prompt(2.1, 0.456, "low", "degree", rng=0)
    assert "2.10" in p
    assert "0.46" in p
    assert "low" in p


def test_property_prompt_levels_and_kinds():
    for level, which in itertools.product(("low", "medium", "high"),
                                          ("degree", "clustering")):
        p = render_property_prompt(12.0, 0.3, level, which, rng=1)
        assert level in p
        assert "12.00" in p and "0.30" in p
    with pytest.raises(ValueError, match="level"):
        render_property_prompt(1.0, 0.5, "extreme", "degree")
    with pytest.raises(ValueError, match="which"):
        render_property_prompt(1.0, 0.5, "low", "entropy")


def test_encode_text_unit_norm_and_deterministic():
    v1 = encode_text("The power grid graph", 32)
    v2 = encode_text("The power grid graph", 32)
    assert np.array_equal(v1, v2)
    assert np.linalg.norm(v1) == pytest.approx(1.0)
    assert v1.shape == (32,)


def test_encode_text_case_folded():
    assert np.array_equal(encode_text("Power Grid", 16), encode_text("power grid", 16))


def test_encode_text_rejects_small_dim_and_empty():
    with pytest.raises(ValueError, match=">= 8"):
        encode_text("hello", 4)
    with pytest.raises(ValueError, match="empty"):
        encode_text("   ", 16)


def test_shared_vocabulary_is_more_similar():
    dim = 64
    same_a = render_domain_prompt("power", "power-a", rng=0)
    same_b = render_domain_prompt("power", "power-b", rng=1)
    other = render_domain_prompt("eco", "food-web-x", rng=2)
    ea, eb, eo = (encode_text(t, dim) for t in (same_a, same_b, other))
    assert float(ea @ eb) > float(ea @ eo)


def test_embedding_file_round_trip(tmp_path):
    texts = [render_domain_prompt("fb", f"fb-{i}", rng=i) for i in range(5)]
    path = tmp_path / "emb.txt"
    save_embeddings(path, texts, dim=16)
    store = load_embeddings(path)
    assert store.dim == 16
    assert store.encoder_id == ENCODER_ID
    enc = TextEncoder(16)
    for t in texts:
        assert np.array_equal(store(t), enc(t))


def test_embedding_store_missing_prompt():
    store = EmbeddingStore(16, ENCODER_ID, {})
    with pytest.raises(KeyError, match="no stored embedding"):
        store("never seen this prompt")


def test_load_embeddings_rejects_malformed(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("dim=16 encoder=x\nabc 1.0 2.0\n")
    with pytest.raises(ValueError, match=":2"):
        load_embeddings(path)
    path.write_text("not a header\n")
    with pytest.raises(ValueError, match="header"):
        load_embeddings(path)
