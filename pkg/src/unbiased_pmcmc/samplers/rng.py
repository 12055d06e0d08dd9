"""
Deterministic, splittable random streams.

A stream is a key ``(seed, path)``; every call to :meth:`RngStream.generator`
builds a fresh counter-based Philox generator from that key, so the same key
always replays the same numbers and per-particle work can be scheduled on any
worker without changing results.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..models.error_handling import DomainError

_MAX_SEED = 2**64


@dataclass(frozen=True)
class RngStream:
    seed: int
    path: Tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= int(self.seed) < _MAX_SEED:
            raise DomainError(
                f"seed must be a 64-bit unsigned integer, got {self.seed}"
            )
        for index in self.path:
            if int(index) < 0:
                raise DomainError(
                    f"stream path indices must be non-negative: {self.path}"
                )
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "path", tuple(int(i) for i in self.path))

    def child(self, *indices: int) -> "RngStream":
        """Extend the path, e.g. ``stream.child(stage, particle)``."""
        return RngStream(self.seed, self.path + tuple(indices))

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(sequence))

    def uniform(self) -> float:
        """Single Uniform(0, 1) draw from a fresh generator."""
        return float(self.generator().random())
