"""Deterministic random numbers built on a SplitMix64 sequence.

Every stochastic component of the package (forest bootstraps, network
initialization, epoch shuffles, synthetic data) draws from this generator so
that a seed fully determines all outputs, independent of platform and of any
third-party RNG implementation.

The sequence is the standard SplitMix64: the 64-bit state advances by the
golden-ratio increment 0x9E3779B97F4A7C15 and each output is the finalizer

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    z ^= z >> 31

applied to the advanced state. Derived draws are defined on top of the raw
64-bit stream as documented on each method, so any implementation of the same
scheme reproduces them bit for bit.
"""

from __future__ import annotations

import math

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    """Seeded 64-bit generator with a handful of derived draw types."""

    def __init__(self, seed: int):
        self._state = seed & _MASK
        self._spare_normal = None

    def u64(self) -> int:
        """Next raw 64-bit output."""
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def spawn(self) -> "SplitMix64":
        """Child generator seeded with the next raw output."""
        return SplitMix64(self.u64())

    def uniform(self) -> float:
        """Float in [0, 1) from the top 53 bits of one raw output."""
        return (self.u64() >> 11) * (2.0 ** -53)

    def normal(self) -> float:
        """Standard normal via Box-Muller; draws two uniforms per pair."""
        if self._spare_normal is not None:
            z = self._spare_normal
            self._spare_normal = None
            return z
        # u1 in (0, 1] so the log is finite.
        u1 = 1.0 - self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        self._spare_normal = r * math.sin(theta)
        return r * math.cos(theta)

    def randint(self, n: int) -> int:
        """Integer in [0, n) as u64() mod n (documented, bias negligible)."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.u64() % n

    def shuffle(self, items) -> None:
        """In-place Fisher-Yates from the last element down."""
        for i in range(len(items) - 1, 0, -1):
            j = self.u64() % (i + 1)
            items[i], items[j] = items[j], items[i]

    def normals(self, n: int) -> list[float]:
        return [self.normal() for _ in range(n)]
