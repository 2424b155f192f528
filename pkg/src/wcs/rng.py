"""Reproducible 64-bit mix generator.

All randomness in the toolkit (synthetic demand, synthetic classification
data, oracle trial generation) flows through this generator so that results
are bit-identical for a fixed seed, independent of platform and of numpy's
generator versioning.

Recurrence (all arithmetic mod 2**64):

    state <- state + 0x9E3779B97F4A7C15
    z <- state
    z <- (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z <- (z ^ (z >> 27)) * 0x94D049BB133111EB
    output = z ^ (z >> 31)

Derived draws:

    uniform in [0,1) = (output >> 11) * 2**-53
    exponential(mu)  = -mu * ln(1 - u)
    gaussian pairs by Box-Muller on consecutive uniforms (u1, u2) with
    r = sqrt(-2 ln(1 - u1)), theta = 2 pi u2; the cosine branch is
    consumed first, the sine branch on the following call.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV53 = 2.0 ** -53


class SplitMix64:
    """Stateful splitmix-style generator with the normative recurrence above."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * _INV53

    def exponential(self, mu: float) -> float:
        return -mu * math.log(1.0 - self.uniform())

    def gauss_pair(self) -> tuple[float, float]:
        """Box-Muller pair from two consecutive uniforms; cosine branch first."""
        u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(1.0 - u1))
        theta = 2.0 * math.pi * u2
        return r * math.cos(theta), r * math.sin(theta)

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in {lo, ..., hi} by modular reduction (tiny ranges only)."""
        return lo + self.next_u64() % (hi - lo + 1)
