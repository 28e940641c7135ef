"""Seeded random number generation."""

import numpy as np


class Rng:
    """
    Explicit-state pseudorandom generator.

    Wraps numpy's PCG64 bit generator, whose output stream is fixed for a
    given seed on every platform. Child generators are derived through
    `SeedSequence.spawn`, so per-worker streams do not depend on scheduling.

    Args:
        seed: 64-bit integer seed
    """

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        self.seed = int(seed)
        self._sequence = np.random.SeedSequence(self.seed)
        self.generator = np.random.Generator(np.random.PCG64(self._sequence))

    @property
    def state(self) -> dict:
        return self.generator.bit_generator.state

    def spawn(self, count: int) -> list["Rng"]:
        """Derive `count` independent child generators."""
        children = []
        for child in self._sequence.spawn(count):
            rng = Rng.__new__(Rng)
            rng.seed = self.seed
            rng._sequence = child
            rng.generator = np.random.Generator(np.random.PCG64(child))
            children.append(rng)
        return children

    def derive(self, stream: int) -> "Rng":
        """Deterministic sub-stream keyed by an integer (e.g. epoch number)."""
        return Rng(int(np.random.SeedSequence([self.seed, stream]).generate_state(1, np.uint64)[0]))

    def integers(self, low: int, high: int | None = None, size=None) -> np.ndarray:
        return self.generator.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def choice(self, a, size=None, replace: bool = True) -> np.ndarray:
        return self.generator.choice(a, size=size, replace=replace)

    def normal(self, loc: float = 0.0, scale: float = 1.0, size=None) -> np.ndarray:
        return self.generator.normal(loc, scale, size=size)

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None) -> np.ndarray:
        return self.generator.uniform(low, high, size=size)
