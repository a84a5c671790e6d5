"""SplitMix64 pseudo-random generator with keyed substreams.

The generator is tiny and fully specified, so scenes are byte-identical on
every platform and Python version.
"""

from __future__ import annotations

from collections.abc import Sequence
from typing import TypeVar

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

# Substream keys
SHELF_STREAM = 1
CAMERA_STREAM = 2
CLUTTER_STREAM = 3
SAMPLE_STREAM = 4

T = TypeVar("T")


def mix64(z: int) -> int:
    """SplitMix64 output finalizer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *keys: int) -> int:
    """Derive an independent 64-bit seed from a parent seed and integer keys.

    Args:
        seed: Parent seed.
        *keys: Path of non-negative integer keys, e.g. (SHELF_STREAM, 2).

    Returns:
        Child seed in [0, 2**64).
    """
    state = seed & MASK64
    for key in keys:
        state = mix64((state + GOLDEN_GAMMA * (key + 1)) & MASK64)
    return state


class SplitMix64:
    """64-bit SplitMix generator.

    Attributes:
        state: Current 64-bit state.
    """

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return mix64(self.state)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.random()

    def randint(self, low: int, high: int) -> int:
        """Uniform integer in the closed range [low, high]."""
        if high < low:
            raise ValueError(f"Empty range [{low}, {high}]")
        span = high - low + 1
        return low + ((self.next_u64() * span) >> 64)

    def choice(self, items: Sequence[T]) -> T:
        return items[self.randint(0, len(items) - 1)]

    def substream(self, *keys: int) -> SplitMix64:
        """Independent generator keyed off the current state."""
        return SplitMix64(derive_seed(self.state, *keys))
