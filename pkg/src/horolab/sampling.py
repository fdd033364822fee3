"""Seeded sample generation for the empirical checkers.

Samples are dense on a small index window with coordinates uniform in
[-1, 1]; with a fixed seed every verdict derived from them is reproducible.
"""

from __future__ import annotations

import numpy as np

from .spaces import SeqVector, Space

__all__ = ["window_indices", "sample_vector", "sample_vectors", "sample_pairs"]


def window_indices(space: Space, window: int = 32) -> tuple[int, ...]:
    """Index window samples live on: 1..dim for euclidean, 1..window otherwise."""
    if space.kind == "euclidean":
        return tuple(range(1, space.dim + 1))
    return tuple(range(1, window + 1))


def sample_vector(rng: np.random.Generator, indices: tuple[int, ...]) -> SeqVector:
    coeffs = rng.uniform(-1.0, 1.0, size=len(indices))
    return SeqVector({s: float(c) for s, c in zip(indices, coeffs)})


def sample_vectors(rng: np.random.Generator, indices: tuple[int, ...], count: int):
    return [sample_vector(rng, indices) for _ in range(count)]


def sample_pairs(rng: np.random.Generator, indices: tuple[int, ...], count: int):
    return [
        (sample_vector(rng, indices), sample_vector(rng, indices))
        for _ in range(count)
    ]
