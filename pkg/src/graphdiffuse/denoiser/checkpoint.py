"""Byte-stable checkpoint files for trained denoisers.

Layout: an 8-byte magic string, an 8-byte big-endian header length, a JSON
header (sorted keys, compact separators), then the raw little-endian float64
array payloads back to back in the order the header lists them.  The header
stores shapes and payload offsets for every parameter block, the denoiser
and transition-model configuration, and a provenance record (seeds, epoch
counts, corpus fingerprints, training-graph hashes, stage history).

Nothing in the file depends on the time or machine it was written on, so
saving the same model twice yields identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..diffusion import NoiseSchedule, TransitionModel
from ..graphs import CategorySpace
from .network import DenoiserConfig

__all__ = ["save_checkpoint", "load_checkpoint", "checkpoint_header"]

_MAGIC = b"GDFCKPT1"
_FORMAT = 1


class _BlobWriter:
    def __init__(self):
        self.chunks = []
        self.offset = 0

    def add(self, arr: np.ndarray) -> dict:
        data = np.ascontiguousarray(arr, dtype=np.float64).tobytes()
        ref = {"shape": list(arr.shape), "offset": self.offset,
               "length": len(data)}
        self.chunks.append(data)
        self.offset += len(data)
        return ref


def _config_dict(config: DenoiserConfig) -> dict:
    return {
        "n_node_categories": config.space.n_node_categories,
        "n_edge_categories": config.space.n_edge_categories,
        "hidden": config.hidden,
        "layers": config.layers,
        "n_spectral": config.n_spectral,
        "time_embed_dim": config.time_embed_dim,
        "text_embed_dim": config.text_embed_dim,
        "node_loss_weight": config.node_loss_weight,
        "edge_loss_weight": config.edge_loss_weight,
    }


def save_checkpoint(path, params: dict, config: DenoiserConfig,
                    tm: TransitionModel, provenance: dict) -> None:
    """Write model weights, transition model, and provenance to one file."""
    writer = _BlobWriter()
    param_entries = {name: writer.add(params[name]) for name in sorted(params)}
    transition = {
        "kind": tm.kind,
        "node_mix": writer.add(tm.node_mix),
        "edge_mix": writer.add(tm.edge_mix),
        "schedule": {
            "n_steps": tm.schedule.n_steps,
            "alpha": writer.add(tm.schedule.alpha),
            "alpha_bar": writer.add(tm.schedule.alpha_bar),
        },
        "domain_node_mix": None,
        "domain_edge_mix": None,
    }
    if tm.domain_node_mix is not None:
        transition["domain_node_mix"] = {
            name: writer.add(tm.domain_node_mix[name])
            for name in sorted(tm.domain_node_mix)}
        transition["domain_edge_mix"] = {
            name: writer.add(tm.domain_edge_mix[name])
            for name in sorted(tm.domain_edge_mix)}
    header = {
        "format": _FORMAT,
        "config": _config_dict(config),
        "params": param_entries,
        "transition": transition,
        "provenance": provenance,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(len(blob).to_bytes(8, "big"))
        fh.write(blob)
        for chunk in writer.chunks:
            fh.write(chunk)


def _read_blob(payload: bytes, ref: dict) -> np.ndarray:
    raw = payload[ref["offset"]: ref["offset"] + ref["length"]]
    arr = np.frombuffer(raw, dtype="<f8").copy()
    return arr.reshape(ref["shape"])


def checkpoint_header(path) -> dict:
    """Parse just the JSON header of a checkpoint (cheap provenance reads)."""
    data = Path(path).read_bytes()
    if data[: len(_MAGIC)] != _MAGIC:
        raise ValueError(f"{path} is not a denoiser checkpoint")
    header_len = int.from_bytes(data[len(_MAGIC): len(_MAGIC) + 8], "big")
    start = len(_MAGIC) + 8
    return json.loads(data[start: start + header_len].decode())


def load_checkpoint(path):
    """Read a checkpoint; returns (params, config, transition_model, provenance)."""
    data = Path(path).read_bytes()
    if data[: len(_MAGIC)] != _MAGIC:
        raise ValueError(f"{path} is not a denoiser checkpoint")
    header_len = int.from_bytes(data[len(_MAGIC): len(_MAGIC) + 8], "big")
    start = len(_MAGIC) + 8
    header = json.loads(data[start: start + header_len].decode())
    if header["format"] != _FORMAT:
        raise ValueError(f"unsupported checkpoint format {header['format']}")
    payload = data[start + header_len:]

    cfg = header["config"]
    space = CategorySpace(cfg["n_node_categories"], cfg["n_edge_categories"])
    config = DenoiserConfig(
        space=space,
        hidden=cfg["hidden"],
        layers=cfg["layers"],
        n_spectral=cfg["n_spectral"],
        time_embed_dim=cfg["time_embed_dim"],
        text_embed_dim=cfg["text_embed_dim"],
        node_loss_weight=cfg["node_loss_weight"],
        edge_loss_weight=cfg["edge_loss_weight"],
    )
    params = {name: _read_blob(payload, ref)
              for name, ref in header["params"].items()}
    tr = header["transition"]
    schedule = NoiseSchedule(
        n_steps=tr["schedule"]["n_steps"],
        alpha=_read_blob(payload, tr["schedule"]["alpha"]),
        alpha_bar=_read_blob(payload, tr["schedule"]["alpha_bar"]),
    )
    domain_node = domain_edge = None
    if tr["domain_node_mix"] is not None:
        domain_node = {name: _read_blob(payload, ref)
                       for name, ref in tr["domain_node_mix"].items()}
        domain_edge = {name: _read_blob(payload, ref)
                       for name, ref in tr["domain_edge_mix"].items()}
    tm = TransitionModel(
        kind=tr["kind"],
        space=space,
        schedule=schedule,
        node_mix=_read_blob(payload, tr["node_mix"]),
        edge_mix=_read_blob(payload, tr["edge_mix"]),
        domain_node_mix=domain_node,
        domain_edge_mix=domain_edge,
    )
    return params, config, tm, header["provenance"]
