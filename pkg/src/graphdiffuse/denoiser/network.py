"""Message-passing denoiser over categorical graphs, in plain numpy.

The network maps a noisy graph at step t to per-slot distributions over the
clean categories.  Node features are the category one-hot plus degree/n and
the local clustering value; edge features are the category one-hot; a shared
graph-level vector holds the leading normalized-Laplacian eigenvalues, a
sinusoidal embedding of t/T, and optionally a text embedding.

Each layer gates node messages by an edge-state MLP (so the edge category
seen at slot (i, j) controls how much of node j's state reaches node i) and
then refreshes edge states from the incident node states.  Edge logits are
symmetrized before the softmax, which makes outputs invariant to the
direction convention and keeps predicted pair distributions exactly
symmetric.  Gradients are computed by hand; `loss_and_grad` returns one
array per parameter block so finite-difference checks can walk the blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..graphs import (
    CategorySpace,
    Graph,
    SoftGraph,
    clustering_coefficient,
    degree_vector,
    laplacian_spectrum,
)
from ..rng import as_generator

__all__ = [
    "DenoiserConfig",
    "init_params",
    "zero_params",
    "extract_features",
    "predict",
    "graph_loss",
    "loss_and_grad",
]


@dataclass(frozen=True)
class DenoiserConfig:
    space: CategorySpace
    hidden: int = 64
    layers: int = 2
    n_spectral: int = 8
    time_embed_dim: int = 16
    text_embed_dim: int = 64
    node_loss_weight: float = 1.0
    edge_loss_weight: float = 5.0

    def __post_init__(self) -> None:
        if self.hidden < 1 or self.layers < 1:
            raise ValueError("hidden and layers must be positive")
        if self.n_spectral < 1:
            raise ValueError("n_spectral must be positive")
        if self.time_embed_dim < 2 or self.time_embed_dim % 2:
            raise ValueError("time_embed_dim must be even and at least 2")
        if self.text_embed_dim < 0:
            raise ValueError("text_embed_dim must be non-negative")
        if self.node_loss_weight <= 0 or self.edge_loss_weight <= 0:
            raise ValueError("loss weights must be positive")

    @property
    def node_feature_dim(self) -> int:
        return self.space.n_node_categories + 2

    @property
    def edge_feature_dim(self) -> int:
        return self.space.n_edge_categories

    @property
    def graph_feature_dim(self) -> int:
        return self.n_spectral + self.time_embed_dim + self.text_embed_dim


def _param_shapes(config: DenoiserConfig) -> dict:
    h = config.hidden
    fx = config.node_feature_dim
    fe = config.edge_feature_dim
    fg = config.graph_feature_dim
    d_x = config.space.n_node_categories
    d_e = config.space.n_edge_categories
    shapes = {
        "in_node_w": (fx, h),
        "in_node_gw": (fg, h),
        "in_node_b": (h,),
        "in_edge_w": (fe, h),
        "in_edge_gw": (fg, h),
        "in_edge_b": (h,),
    }
    for l in range(config.layers):
        shapes[f"l{l}_gate_w"] = (h, h)
        shapes[f"l{l}_gate_b"] = (h,)
        shapes[f"l{l}_msg_w"] = (h, h)
        shapes[f"l{l}_self_w"] = (h, h)
        shapes[f"l{l}_node_gw"] = (fg, h)
        shapes[f"l{l}_node_b"] = (h,)
        shapes[f"l{l}_edge_uw"] = (h, h)
        shapes[f"l{l}_edge_hw"] = (h, h)
        shapes[f"l{l}_edge_gw"] = (fg, h)
        shapes[f"l{l}_edge_b"] = (h,)
    shapes["out_node_w"] = (h, d_x)
    shapes["out_node_b"] = (d_x,)
    shapes["out_edge_w"] = (3 * h, d_e)
    shapes["out_edge_b"] = (d_e,)
    return shapes


def init_params(config: DenoiserConfig, rng=None) -> dict:
    """Seeded Gaussian init scaled by 1/sqrt(fan_in); gate biases start at 1
    so messages flow freely before the gates have learned anything."""
    gen = as_generator(rng)
    params = {}
    for name, shape in _param_shapes(config).items():
        if name.endswith("_b"):
            fill = 1.0 if "gate" in name else 0.0
            params[name] = np.full(shape, fill, dtype=np.float64)
        else:
            scale = 1.0 / math.sqrt(shape[0])
            params[name] = gen.normal(0.0, scale, size=shape)
    return params


def zero_params(config: DenoiserConfig) -> dict:
    return {name: np.zeros(shape, dtype=np.float64)
            for name, shape in _param_shapes(config).items()}


def _time_embedding(t: int, n_steps: int, dim: int) -> np.ndarray:
    x = t / n_steps
    half = dim // 2
    freqs = math.pi * (2.0 ** np.arange(half))
    ang = x * freqs
    return np.concatenate([np.sin(ang), np.cos(ang)])


def extract_features(g: Graph, t: int, n_steps: int, config: DenoiserConfig,
                     text_vec=None):
    """Per-node, per-pair, and graph-level feature arrays for one noisy graph."""
    n = g.n_nodes
    deg = degree_vector(g).astype(np.float64) / max(n, 1)
    cc = clustering_coefficient(g)
    Xf = np.concatenate(
        [g.node_onehot.astype(np.float64), deg[:, None], cc[:, None]], axis=1)
    Ef = g.pair_onehot.astype(np.float64)
    spec = laplacian_spectrum(g)[: config.n_spectral]
    spec_block = np.zeros(config.n_spectral)
    spec_block[: spec.shape[0]] = spec
    parts = [spec_block, _time_embedding(t, n_steps, config.time_embed_dim)]
    if config.text_embed_dim > 0:
        if text_vec is None:
            parts.append(np.zeros(config.text_embed_dim))
        else:
            text_vec = np.asarray(text_vec, dtype=np.float64)
            if text_vec.shape != (config.text_embed_dim,):
                raise ValueError(
                    f"text embedding has shape {text_vec.shape}, "
                    f"expected ({config.text_embed_dim},)")
            parts.append(text_vec)
    elif text_vec is not None:
        raise ValueError("model was built without a text block")
    return Xf, Ef, np.concatenate(parts)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=-1, keepdims=True)


@dataclass
class _ForwardCache:
    Xf: np.ndarray
    Ef: np.ndarray
    gf: np.ndarray
    H0: np.ndarray
    U0: np.ndarray
    layers: list = field(default_factory=list)
    node_probs: np.ndarray | None = None
    pair_probs: np.ndarray | None = None


def _forward(params: dict, config: DenoiserConfig, Xf, Ef, gf) -> _ForwardCache:
    n = Xf.shape[0]
    cache = _ForwardCache(Xf=Xf, Ef=Ef, gf=gf, H0=None, U0=None)
    H = np.tanh(Xf @ params["in_node_w"] + gf @ params["in_node_gw"]
                + params["in_node_b"])
    U = np.tanh(Ef @ params["in_edge_w"] + gf @ params["in_edge_gw"]
                + params["in_edge_b"])
    cache.H0, cache.U0 = H, U
    for l in range(config.layers):
        G = _sigmoid(U @ params[f"l{l}_gate_w"] + params[f"l{l}_gate_b"])
        P = H @ params[f"l{l}_msg_w"]
        M = (G * P[None, :, :]).mean(axis=1)
        Hn = np.tanh(H @ params[f"l{l}_self_w"] + M
                     + gf @ params[f"l{l}_node_gw"] + params[f"l{l}_node_b"])
        S = Hn[:, None, :] + Hn[None, :, :]
        Un = np.tanh(U @ params[f"l{l}_edge_uw"] + S @ params[f"l{l}_edge_hw"]
                     + gf @ params[f"l{l}_edge_gw"] + params[f"l{l}_edge_b"])
        cache.layers.append({"H_in": H, "U_in": U, "G": G, "P": P,
                             "Hn": Hn, "S": S, "Un": Un})
        H, U = Hn, Un
    node_logits = H @ params["out_node_w"] + params["out_node_b"]
    Hi = np.broadcast_to(H[:, None, :], (n, n, config.hidden))
    Hj = np.broadcast_to(H[None, :, :], (n, n, config.hidden))
    cat = np.concatenate([Hi, Hj, U], axis=2)
    raw = cat @ params["out_edge_w"] + params["out_edge_b"]
    pair_logits = 0.5 * (raw + raw.transpose(1, 0, 2))
    cache.node_probs = _softmax(node_logits)
    cache.pair_probs = _softmax(pair_logits)
    return cache


def predict(params: dict, config: DenoiserConfig, g_t: Graph, t: int,
            n_steps: int, text_vec=None) -> SoftGraph:
    """Distributions over clean categories for every slot of a noisy graph."""
    if g_t.space != config.space:
        raise ValueError("graph and denoiser disagree on category counts")
    Xf, Ef, gf = extract_features(g_t, t, n_steps, config, text_vec)
    cache = _forward(params, config, Xf, Ef, gf)
    pair = cache.pair_probs.copy()
    n = g_t.n_nodes
    diag = np.zeros(config.space.n_edge_categories)
    diag[0] = 1.0
    pair[np.arange(n), np.arange(n)] = diag
    return SoftGraph(config.space, cache.node_probs, pair)


def graph_loss(node_probs, pair_probs, g0: Graph, config: DenoiserConfig) -> float:
    """Weighted cross-entropy of predicted slot distributions against a clean
    graph: node slots averaged over n, edge slots over the n(n-1)/2 unordered
    off-diagonal pairs, then combined with the configured weights."""
    n = g0.n_nodes
    eps = 1e-300
    node_ce = -np.log(
        np.maximum((node_probs * g0.node_onehot).sum(axis=1), eps)).mean()
    iu, ju = np.triu_indices(n, k=1)
    if iu.size:
        picked = (pair_probs[iu, ju] * g0.pair_onehot[iu, ju]).sum(axis=1)
        edge_ce = -np.log(np.maximum(picked, eps)).mean()
        w_x, w_e = config.node_loss_weight, config.edge_loss_weight
        return float((w_x * node_ce + w_e * edge_ce) / (w_x + w_e))
    return float(node_ce)


def _backward(params: dict, config: DenoiserConfig, cache: _ForwardCache,
              g0: Graph, grads: dict) -> float:
    """Accumulate dLoss/dParam for one graph into `grads`; returns the loss."""
    n = g0.n_nodes
    h = config.hidden
    loss = graph_loss(cache.node_probs, cache.pair_probs, g0, config)

    iu, ju = np.triu_indices(n, k=1)
    n_pairs = iu.size
    if n_pairs:
        w_x = config.node_loss_weight / (config.node_loss_weight
                                         + config.edge_loss_weight)
        w_e = 1.0 - w_x
    else:
        w_x, w_e = 1.0, 0.0

    # Softmax + cross-entropy heads.
    d_node_logits = (cache.node_probs - g0.node_onehot) * (w_x / n)
    d_pair_logits = np.zeros_like(cache.pair_probs)
    if n_pairs:
        delta = (cache.pair_probs[iu, ju] - g0.pair_onehot[iu, ju])
        d_pair_logits[iu, ju] = delta * (w_e / n_pairs)
    # pair_logits = (raw + raw^T) / 2
    d_raw = 0.5 * (d_pair_logits + d_pair_logits.transpose(1, 0, 2))

    last = cache.layers[-1]
    H, U = last["Hn"], last["Un"]
    grads["out_node_w"] += H.T @ d_node_logits
    grads["out_node_b"] += d_node_logits.sum(axis=0)
    d_H = d_node_logits @ params["out_node_w"].T

    Hi = np.broadcast_to(H[:, None, :], (n, n, h))
    Hj = np.broadcast_to(H[None, :, :], (n, n, h))
    cat = np.concatenate([Hi, Hj, U], axis=2)
    grads["out_edge_w"] += np.einsum("ijf,ijk->fk", cat, d_raw)
    grads["out_edge_b"] += d_raw.sum(axis=(0, 1))
    d_cat = d_raw @ params["out_edge_w"].T
    d_H += d_cat[:, :, :h].sum(axis=1) + d_cat[:, :, h:2 * h].sum(axis=0)
    d_U = d_cat[:, :, 2 * h:]

    gf = cache.gf
    for l in range(config.layers - 1, -1, -1):
        lc = cache.layers[l]
        H_in, U_in = lc["H_in"], lc["U_in"]
        Hn, Un, G, P, S = lc["Hn"], lc["Un"], lc["G"], lc["P"], lc["S"]

        # Edge update: Un = tanh(U_in@uw + S@hw + gf@gw + b)
        d_au = d_U * (1.0 - Un * Un)
        grads[f"l{l}_edge_uw"] += np.einsum("ijh,ijk->hk", U_in, d_au)
        grads[f"l{l}_edge_hw"] += np.einsum("ijh,ijk->hk", S, d_au)
        au_sum = d_au.sum(axis=(0, 1))
        grads[f"l{l}_edge_gw"] += np.outer(gf, au_sum)
        grads[f"l{l}_edge_b"] += au_sum
        d_U_in = d_au @ params[f"l{l}_edge_uw"].T
        d_S = d_au @ params[f"l{l}_edge_hw"].T
        d_Hn = d_H + d_S.sum(axis=1) + d_S.sum(axis=0)

        # Node update: Hn = tanh(H_in@self + mean_j G*P + gf@gw + b)
        d_ah = d_Hn * (1.0 - Hn * Hn)
        grads[f"l{l}_self_w"] += H_in.T @ d_ah
        ah_sum = d_ah.sum(axis=0)
        grads[f"l{l}_node_gw"] += np.outer(gf, ah_sum)
        grads[f"l{l}_node_b"] += ah_sum
        d_H_in = d_ah @ params[f"l{l}_self_w"].T
        d_M = d_ah
        d_G = d_M[:, None, :] * P[None, :, :] / n
        d_P = np.einsum("ijh,ih->jh", G, d_M) / n
        grads[f"l{l}_msg_w"] += H_in.T @ d_P
        d_H_in += d_P @ params[f"l{l}_msg_w"].T

        # Gate: G = sigmoid(U_in@gate_w + gate_b)
        d_ag = d_G * G * (1.0 - G)
        grads[f"l{l}_gate_w"] += np.einsum("ijh,ijk->hk", U_in, d_ag)
        grads[f"l{l}_gate_b"] += d_ag.sum(axis=(0, 1))
        d_U_in += d_ag @ params[f"l{l}_gate_w"].T

        d_H, d_U = d_H_in, d_U_in

    # Input encoders.
    d_a0 = d_H * (1.0 - cache.H0 * cache.H0)
    grads["in_node_w"] += cache.Xf.T @ d_a0
    a0_sum = d_a0.sum(axis=0)
    grads["in_node_gw"] += np.outer(gf, a0_sum)
    grads["in_node_b"] += a0_sum

    d_e0 = d_U * (1.0 - cache.U0 * cache.U0)
    grads["in_edge_w"] += np.einsum("ijf,ijk->fk", cache.Ef, d_e0)
    e0_sum = d_e0.sum(axis=(0, 1))
    grads["in_edge_gw"] += np.outer(gf, e0_sum)
    grads["in_edge_b"] += e0_sum
    return loss


def loss_and_grad(params: dict, config: DenoiserConfig, items, n_steps: int):
    """Mean loss and mean gradient over a batch.

    Each item is a tuple (g0, g_t, t, text_vec_or_None).  Means are taken
    over items, so duplicating the batch leaves the gradient unchanged.
    """
    items = list(items)
    if not items:
        raise ValueError("empty batch")
    grads = {name: np.zeros_like(p) for name, p in params.items()}
    total = 0.0
    for g0, g_t, t, text_vec in items:
        Xf, Ef, gf = extract_features(g_t, t, n_steps, config, text_vec)
        cache = _forward(params, config, Xf, Ef, gf)
        total += _backward(params, config, cache, g0, grads)
    scale = 1.0 / len(items)
    for name in grads:
        grads[name] *= scale
    return total * scale, grads
