"""
RNG Stream Model Module

Reproducible random streams keyed by (seed, purpose, agent, iteration).
"""

from dataclasses import dataclass

import numpy as np

# First spawn-key element; keeps the streams of different consumers disjoint
PURPOSE_DIRECTIONS = 0
PURPOSE_GRAPH = 1
PURPOSE_SUITE = 2
PURPOSE_INIT = 3
PURPOSE_VERIFY = 4
PURPOSE_SPECTRAL = 5


@dataclass(frozen=True)
class RngStream:
    """Identifies one independent PCG64 stream.

    Identical (seed, purpose, agent, t) tuples give identical draw sequences;
    distinct tuples give statistically independent streams (SeedSequence
    spawn keys).
    """

    seed: int
    agent: int = 0
    t: int = 0
    purpose: int = PURPOSE_DIRECTIONS

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of the stream."""
        sequence = np.random.SeedSequence(entropy=int(self.seed) & 0xFFFFFFFFFFFFFFFF,
                                          spawn_key=(self.purpose, self.agent, self.t))
        return np.random.Generator(np.random.PCG64(sequence))

    @classmethod
    def for_purpose(cls, seed: int, purpose: int) -> 'RngStream':
        return cls(seed=seed, agent=0, t=0, purpose=purpose)
