"""Training, fine-tuning, and ancestral sampling for the graph denoiser."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..corpus import Corpus, draw_node_count
from ..diffusion import TransitionModel, forward_sample, posterior_step, sample_graph, stationary_graph
from ..graphs import Graph
from ..rng import as_generator, child_seed
from .network import DenoiserConfig, init_params, loss_and_grad, predict

__all__ = [
    "OptimConfig",
    "TrainReport",
    "AdamW",
    "train",
    "fine_tune",
    "sample",
    "sample_many",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimConfig:
    epochs: int = 300
    learning_rate: float = 3e-3
    batch_size: int = 12
    grad_accum: int = 4
    weight_decay: float = 1e-12
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1 or self.grad_accum < 1:
            raise ValueError("batch_size and grad_accum must be positive")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("betas must lie in [0, 1)")


class AdamW:
    """Decoupled-weight-decay Adam over a dict of parameter arrays."""

    def __init__(self, params: dict, config: OptimConfig):
        self.config = config
        self.step_count = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict, grads: dict) -> None:
        c = self.config
        self.step_count += 1
        bc1 = 1.0 - c.beta1 ** self.step_count
        bc2 = 1.0 - c.beta2 ** self.step_count
        for name, g in grads.items():
            m = self.m[name]
            v = self.v[name]
            m *= c.beta1
            m += (1.0 - c.beta1) * g
            v *= c.beta2
            v += (1.0 - c.beta2) * g * g
            update = (m / bc1) / (np.sqrt(v / bc2) + c.eps)
            params[name] -= c.learning_rate * (update + c.weight_decay * params[name])


@dataclass(frozen=True)
class TrainReport:
    """What one optimization stage did: per-epoch mean losses plus the seeds
    and corpus fingerprint needed to reproduce it."""

    stage: str
    epoch_losses: tuple
    seed: int
    corpus_hash: str
    n_graphs: int

    @property
    def final_loss(self) -> float:
        return self.epoch_losses[-1]


def _resolve_text(entry, embed_fn, config: DenoiserConfig):
    if config.text_embed_dim == 0 or entry.prompt is None or embed_fn is None:
        return None
    return embed_fn(entry.prompt)


def _run_epochs(params: dict, entries, tm: TransitionModel,
                config: DenoiserConfig, opt_config: OptimConfig,
                embed_fn, stage: str, corpus_hash: str) -> TrainReport:
    rng = as_generator(opt_config.seed)
    optimizer = AdamW(params, opt_config)
    n_steps = tm.schedule.n_steps
    epoch_losses = []
    for epoch in range(opt_config.epochs):
        order = rng.permutation(len(entries))
        pending = []  # summed micro-batch gradients awaiting an optimizer step
        n_micro = 0
        epoch_loss = 0.0
        n_items = 0
        micro = []
        for idx in order:
            entry = entries[idx]
            t = int(rng.integers(1, n_steps + 1))
            g_t = forward_sample(entry.graph, tm, t, rng, domain=entry.domain)
            micro.append((entry.graph, g_t, t, _resolve_text(entry, embed_fn, config)))
            if len(micro) < opt_config.batch_size and idx != order[-1]:
                continue
            loss, grads = loss_and_grad(params, config, micro, n_steps)
            epoch_loss += loss * len(micro)
            n_items += len(micro)
            micro = []
            if not pending:
                pending = grads
            else:
                for name in pending:
                    pending[name] += grads[name]
            n_micro += 1
            if n_micro == opt_config.grad_accum:
                for name in pending:
                    pending[name] /= n_micro
                optimizer.step(params, pending)
                pending, n_micro = [], 0
        if n_micro:
            for name in pending:
                pending[name] /= n_micro
            optimizer.step(params, pending)
        mean_loss = epoch_loss / n_items
        if not np.isfinite(mean_loss):
            raise RuntimeError(f"{stage} diverged at epoch {epoch}: "
                               f"loss is {mean_loss}")
        epoch_losses.append(mean_loss)
        if epoch == 0 or (epoch + 1) % 25 == 0:
            log.info("%s epoch %d/%d loss %.4f", stage, epoch + 1,
                     opt_config.epochs, mean_loss)
    return TrainReport(stage, tuple(epoch_losses), opt_config.seed,
                       corpus_hash, len(entries))


def train(corpus: Corpus, tm: TransitionModel, config: DenoiserConfig,
          opt_config: OptimConfig, embed_fn=None):
    """Train a fresh denoiser on the corpus train split.

    Returns (params, report).  `embed_fn` maps a prompt string to a vector of
    length config.text_embed_dim; entries without prompts get a zero block.
    """
    from ..corpus import corpus_hash as hash_fn

    entries = corpus.select("train")
    if not entries:
        raise ValueError("corpus has no training graphs")
    params = init_params(config, child_seed(as_generator(opt_config.seed)))
    report = _run_epochs(params, entries, tm, config, opt_config, embed_fn,
                         "pretrain", hash_fn(corpus))
    return params, report


def fine_tune(params: dict, corpus: Corpus, tm: TransitionModel,
              config: DenoiserConfig, opt_config: OptimConfig, embed_fn=None):
    """Continue training existing weights on a new corpus.

    The incoming parameter dict is not modified; optimizer state starts
    fresh.  Returns (params, report).
    """
    from ..corpus import corpus_hash as hash_fn

    entries = corpus.select("train")
    if not entries:
        raise ValueError("corpus has no training graphs")
    tuned = {name: p.copy() for name, p in params.items()}
    report = _run_epochs(tuned, entries, tm, config, opt_config, embed_fn,
                         "finetune", hash_fn(corpus))
    return tuned, report


def sample(params: dict, config: DenoiserConfig, tm: TransitionModel,
           n_nodes: int, rng=None, domain: str | None = None,
           text_vec=None, steps: int | None = None) -> Graph:
    """Draw one graph by ancestral denoising from the stationary distribution.

    `steps` truncates the reverse pass to start at that step instead of the
    full schedule length.
    """
    gen = as_generator(rng)
    n_steps = tm.schedule.n_steps
    start = n_steps if steps is None else steps
    if not 1 <= start <= n_steps:
        raise ValueError(f"steps must lie in [1, {n_steps}], got {start}")
    g = stationary_graph(n_nodes, tm, gen, domain=domain)
    for t in range(start, 0, -1):
        soft = predict(params, config, g, t, n_steps, text_vec)
        posterior = posterior_step(g, soft, tm, t, domain=domain)
        g = sample_graph(posterior, gen)
    return g


def sample_many(params: dict, config: DenoiserConfig, tm: TransitionModel,
                corpus: Corpus, count: int, rng=None,
                domain: str | None = None, text_vec=None,
                steps: int | None = None, n_nodes: int | None = None):
    """Draw `count` graphs, taking node counts from the corpus train split
    unless a fixed `n_nodes` is given."""
    gen = as_generator(rng)
    out = []
    for _ in range(count):
        n = n_nodes if n_nodes is not None else draw_node_count(corpus, gen, domain=domain)
        out.append(sample(params, config, tm, n, gen, domain=domain,
                          text_vec=text_vec, steps=steps))
    return out
