"""Portable deterministic random streams.

Draws come from SplitMix64 (Steele, Lea & Flood 2014), a 64-bit generator with
published reference code, so the same seed yields the same byte stream in any
language. Independent streams are derived by hashing a label with SHA-256 and
taking the first 8 bytes big-endian as the SplitMix64 seed.
"""

from __future__ import annotations

import hashlib
from decimal import Decimal

MASK64 = (1 << 64) - 1


def stream_seed(root_seed: int, *labels: object) -> int:
    """Derive a 64-bit sub-seed for the stream named by (root_seed, *labels)."""
    tag = "|".join([str(root_seed)] + [str(p) for p in labels])
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


class Stream:
    """One SplitMix64 stream plus convenience draw helpers."""

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection, bias-free."""
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        limit = MASK64 - (MASK64 + 1) % n
        while True:
            v = self.next_u64()
            if v <= limit:
                return v % n

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] inclusive."""
        return lo + self.randrange(hi - lo + 1)

    def chance(self, num: int, den: int) -> bool:
        """True with probability num/den."""
        return self.randrange(den) < num

    def choice(self, seq):
        return seq[self.randrange(len(seq))]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample(self, seq, k: int) -> list:
        """k distinct elements, order randomized."""
        if k > len(seq):
            raise ValueError("sample larger than population")
        pool = list(seq)
        self.shuffle(pool)
        return pool[:k]

    def decimal(self, lo: Decimal, hi: Decimal, scale: int) -> Decimal:
        """Uniform decimal on the scale grid in [lo, hi] inclusive."""
        unit = Decimal(1).scaleb(-scale)
        steps = int((hi - lo) / unit)
        return lo + unit * self.randint(0, steps)


def substream(root_seed: int, *labels: object) -> Stream:
    """Stream for the label path, e.g. substream(seed, task, flavor, i, "eval")."""
    return Stream(stream_seed(root_seed, *labels))
