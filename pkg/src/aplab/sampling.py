"""Deterministic, platform-independent randomness.

A self-contained SplitMix64 stream drives every randomized search in the
package.  Subsets are drawn without replacement by a partial Fisher–Yates
shuffle over the canonical (sorted) element order, so a (seed, inputs) pair
fixes every sample exactly, on every platform.  Attempt-level parallelism uses
per-attempt sub-seeds derived from the master seed by attempt index.
"""

from __future__ import annotations

from typing import Sequence, TypeVar

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15

T = TypeVar("T")


class SplitMix64:
    """The SplitMix64 generator (Steele–Lea–Flood), 64-bit state."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return (z ^ (z >> 31)) & _MASK

    def below(self, n: int) -> int:
        """Uniform integer in [0, n), unbiased via rejection sampling."""
        if n <= 0:
            raise ValueError(f"need n ≥ 1, got {n}")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n


def subseed(master: int, index: int) -> int:
    """Sub-seed for attempt `index`, derived deterministically from the master."""
    if index < 0:
        raise ValueError("attempt index must be ≥ 0")
    sm = SplitMix64((master + _GAMMA * (index + 1)) & _MASK)
    sm.next_u64()
    return sm.next_u64()


def sample_subset(rng: SplitMix64, items: Sequence[T], k: int) -> list[T]:
    """k distinct items via partial Fisher–Yates over the given order."""
    n = len(items)
    if not 0 <= k <= n:
        raise ValueError(f"need 0 ≤ k ≤ {n}, got {k}")
    pool = list(items)
    for i in range(k):
        j = i + rng.below(n - i)
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:k]
