"""Seed handling: everything random flows through numpy Generators."""

from __future__ import annotations

import numpy as np


def as_generator(rng: np.random.Generator | int | None) -> np.random.Generator:
    """Accept a Generator, an integer seed, or None (seed 0)."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(0 if rng is None else int(rng))


def child_seed(rng: np.random.Generator) -> int:
    """Draw a fresh seed for a derived generator, keeping streams decoupled."""
    return int(rng.integers(0, 2**63 - 1))
