"""Seedable, splittable random source with buffered uniform draws.

The streaming pipeline makes many tiny random decisions per transaction;
pulling them one at a time from numpy costs more than the decision itself,
so uniforms are drawn in blocks and handed out as Python floats.
"""

from __future__ import annotations

import numpy as np

_BLOCK = 4096


class RandomStream:
    def __init__(self, seed: int | np.random.SeedSequence | None = None, block: int = _BLOCK):
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
        else:
            self._seq = np.random.SeedSequence(seed)
        self.generator = np.random.Generator(np.random.PCG64(self._seq))
        self._block = block
        self._buf: list[float] = []
        self._pos = 0

    def spawn(self, k: int) -> list[RandomStream]:
        """Independent child streams; deterministic given the parent seed."""
        return [RandomStream(child, self._block) for child in self._seq.spawn(k)]

    def random(self) -> float:
        """Uniform float in [0, 1)."""
        pos = self._pos
        if pos == len(self._buf):
            self._buf = self.generator.random(self._block).tolist()
            pos = 0
        self._pos = pos + 1
        return self._buf[pos]

    def below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        x = int(self.random() * n)
        return x if x < n else n - 1


def as_stream(rng: RandomStream | int | None) -> RandomStream:
    if isinstance(rng, RandomStream):
        return rng
    return RandomStream(rng)
