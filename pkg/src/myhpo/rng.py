"""Seedable random stream with portable Gaussian draws.

Uniforms come from numpy's PCG64 bit generator; normals are derived from
them with the Box-Muller transform so that a (seed, call sequence) pair
reproduces the same values wherever the same bit generator is available.
Each ``normal()`` consumes exactly two uniforms and nothing is cached.
The identifier below is stored in run-trace headers.
"""

from __future__ import annotations

import math

import numpy as np

PRNG_ID = "pcg64+box-muller"


class RandomStream:
    """Stateful scalar random source owned by a single solver run."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """One draw from [lo, hi)."""
        return lo + (hi - lo) * self._gen.random()

    def normal(self) -> float:
        """One standard normal draw via Box-Muller."""
        u1 = 1.0 - self._gen.random()  # in (0, 1]; keeps the log finite
        u2 = self._gen.random()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
