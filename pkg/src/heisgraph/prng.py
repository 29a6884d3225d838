"""Seeded 64-bit generator for reproducible synthetic inputs.

The generator is the splitmix64 recurrence, fixed by its constants so any
implementation (in any language) can reproduce identical streams:

    state   <- (state + 0x9E3779B97F4A7C15) mod 2^64
    z       <- state
    z       <- (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2^64
    z       <- (z XOR (z >> 27)) * 0x94D049BB133111EB mod 2^64
    output  <- z XOR (z >> 31)

Doubles in [0, 1) are formed from the top 53 bits: (output >> 11) * 2^-53.
"""
from __future__ import annotations

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """Deterministic 64-bit stream with a tiny float API."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * MIX1) & MASK64
        z = ((z ^ (z >> 27)) * MIX2) & MASK64
        return z ^ (z >> 31)

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        u = (self.next_u64() >> 11) * 2.0**-53
        return low + (high - low) * u

    def uniforms(self, count: int, low: float = 0.0, high: float = 1.0) -> list[float]:
        return [self.uniform(low, high) for _ in range(count)]

    def integer(self, low: int, high: int) -> int:
        """Uniform integer in [low, high] via rejection-free modular draw."""
        span = high - low + 1
        if span <= 0:
            raise ValueError("empty integer range")
        return low + self.next_u64() % span
