"""Seeded random substreams keyed by simulation coordinates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Stream tags keep the initialization, learning and clustering draws of one
# realization apart even when their numeric keys coincide.
INIT_STREAM = 0
CHILD_STREAM = 1
CLUSTER_STREAM = 2


def _entropy(keys: Sequence[int]) -> list[int]:
    entropy: list[int] = []
    for key in keys:
        value = int(key)
        if value < 0:
            raise ValueError(f"Seed keys must be non-negative, got {value}")
        entropy.append(value)
    return entropy


def derive_seed(base_seed: int, *keys: int) -> int:
    """Split ``base_seed`` into an independent 64-bit seed for ``keys``.

    The split hashes ``(base_seed, *keys)`` through ``numpy.random.SeedSequence``,
    so the result depends only on the key tuple and never on the order in which
    other seeds were derived. Sweeps call it with
    ``(base_seed, model, N, r_key, realization)``.
    """

    sequence = np.random.SeedSequence(_entropy((base_seed, *keys)))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class RandomStreams:
    """Factory of reproducible generators for one realization seed."""

    seed: int

    def generator(self, *keys: int) -> np.random.Generator:
        sequence = np.random.SeedSequence(_entropy((self.seed, *keys)))
        return np.random.Generator(np.random.PCG64(sequence))

    def for_init(self) -> np.random.Generator:
        return self.generator(INIT_STREAM)

    def for_child(self, generation: int, child: int) -> np.random.Generator:
        return self.generator(CHILD_STREAM, generation, child)

    def for_clustering(self) -> np.random.Generator:
        return self.generator(CLUSTER_STREAM)


__all__ = [
    "CHILD_STREAM",
    "CLUSTER_STREAM",
    "INIT_STREAM",
    "RandomStreams",
    "derive_seed",
]
