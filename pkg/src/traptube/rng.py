"""Deterministic pseudo-random streams for sampling and agents.

The generator is SplitMix64 (Steele, Lea & Flood, "Fast Splittable
Pseudorandom Number Generators", 2014): a 64-bit counter advanced by the
golden-gamma constant, finalized with two xor-shift multiplies. It is tiny
and trivially portable, so frozen sample files can be reproduced from any
implementation of the same algorithm.

Named streams are derived, never split in place: ``stream(seed, label)``
seeds a fresh generator with BLAKE2b-64 over the little-endian root seed,
a ``/`` separator, and the UTF-8 label. Draws on one stream never perturb
another, so adding consumers does not shift existing sequences.
"""

from __future__ import annotations

import hashlib
import math

MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    """64-bit SplitMix64 generator with the derived draws used here."""

    def __init__(self, seed: int) -> None:
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * 2.0**-53

    def randrange(self, n: int) -> int:
        """Unbiased integer in [0, n) via rejection on the top range."""
        if n <= 0:
            raise ValueError("randrange() requires n >= 1")
        rem = (1 << 64) % n
        limit = (1 << 64) - rem
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def choice(self, seq):
        if not seq:
            raise ValueError("choice() on empty sequence")
        return seq[self.randrange(len(seq))]

    def normal(self) -> float:
        """Standard normal draw (Box-Muller, cosine branch, 2 uniforms)."""
        u1 = 1.0 - self.random()  # (0, 1], keeps log() finite
        u2 = self.random()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def unit_vector3(self) -> tuple[float, float, float]:
        """Uniform point on the unit 2-sphere: normalized 3-normal draw."""
        while True:
            x, y, z = self.normal(), self.normal(), self.normal()
            norm = math.sqrt(x * x + y * y + z * z)
            if norm > 1e-12:
                return (x / norm, y / norm, z / norm)


def derive_seed(root_seed: int, label: str) -> int:
    """64-bit seed for a named substream of ``root_seed``."""
    h = hashlib.blake2b(digest_size=8)
    h.update((root_seed & MASK64).to_bytes(8, "little"))
    h.update(b"/")
    h.update(label.encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


def stream(root_seed: int, label: str) -> SplitMix64:
    """Fresh generator for the named substream of ``root_seed``."""
    return SplitMix64(derive_seed(root_seed, label))
