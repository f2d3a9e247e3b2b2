"""Reproducible random streams.

Every stream is a Philox counter-based generator keyed by ``(seed, stream)``
through :class:`numpy.random.SeedSequence`, so identical keys reproduce
identical draws and distinct stream ids give independent streams.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GENERATOR_ID = "numpy.random.Philox/SeedSequence(seed, spawn_key=(stream,))"

# Monte Carlo drivers split replicates into fixed blocks, one stream per block,
# so results never depend on how blocks are distributed across workers.
BLOCK_SIZE = 1024


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, index: int) -> "RngStream":
        """Stream for sub-block ``index``; deterministic in (seed, stream, index)."""
        return RngStream(self.seed, self.stream * 1_000_003 + index + 1)


def as_generator(rng) -> np.random.Generator:
    """Accept an RngStream, a Generator, or an int seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if rng is None:
        raise TypeError("an RngStream, Generator or seed is required")
    return RngStream(int(rng)).generator()


def blocks(count: int, block_size: int = BLOCK_SIZE):
    """Yield ``(block_index, start, stop)`` covering ``range(count)``."""
    for b, start in enumerate(range(0, count, block_size)):
        yield b, start, min(count, start + block_size)
