"""Deterministic 64-bit PRNG (SplitMix64) with unbiased bounded draws.

Kept dependency-free so that identical seeds reproduce identical streams on
any platform; all randomized behaviour in the package flows through this
generator.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """SplitMix64 stream seeded with a 64-bit integer."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        """Next raw 64-bit output."""
        self.state = (self.state + _GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def next_below(self, bound: int) -> int:
        """Uniform integer in [0, bound) via rejection sampling.

        Bounds wider than 64 bits are drawn from as many words as needed;
        rejection keeps the result exactly uniform in every case.
        """
        if bound <= 0:
            raise ValueError("bound must be positive")
        if bound == 1:
            return 0
        bits = 64 * ((bound.bit_length() + 63) // 64)
        space = 1 << bits
        limit = space - (space % bound)
        while True:
            value = 0
            for _ in range(bits // 64):
                value = (value << 64) | self.next_u64()
            if value < limit:
                return value % bound

    def choice(self, seq):
        """Uniform element of a non-empty sequence."""
        if not seq:
            raise ValueError("cannot choose from an empty sequence")
        return seq[self.next_below(len(seq))]


def derive_seeds(base: int, count: int) -> list[int]:
    """Deterministic list of sub-seeds derived from a base seed."""
    stream = SplitMix64(base)
    return [stream.next_u64() for _ in range(count)]
