"""Trainable denoiser: network, optimization, sampling, checkpoints."""

from .checkpoint import checkpoint_header, load_checkpoint, save_checkpoint
from .network import (
    DenoiserConfig,
    extract_features,
    graph_loss,
    init_params,
    loss_and_grad,
    predict,
    zero_params,
)
from .training import (
    AdamW,
    OptimConfig,
    TrainReport,
    fine_tune,
    sample,
    sample_many,
    train,
)

__all__ = [
    "DenoiserConfig",
    "OptimConfig",
    "TrainReport",
    "AdamW",
    "extract_features",
    "graph_loss",
    "init_params",
    "zero_params",
    "loss_and_grad",
    "predict",
    "train",
    "fine_tune",
    "sample",
    "sample_many",
    "save_checkpoint",
    "load_checkpoint",
    "checkpoint_header",
]
