"""
Portable random numbers for replayable runs.

PCG32 (XSH-RR variant, 64-bit state, 32-bit output) seeded through splitmix64.
Everything is integer arithmetic masked to 64 bits, so a (seed, run, tick)
triple yields the same stream on every platform and Python version.

Seed derivation::

    sm      = splitmix64
    derived = sm(sm(sm(master) ^ run_index) ^ (tick + 1))
    rng     = PCG32(derived, stream=run_index)

Tick -1 is the setup stream used while building a world.
"""

from collections.abc import Sequence
from typing import TypeVar

MASK32 = 0xFFFFFFFF
MASK64 = 0xFFFFFFFFFFFFFFFF

SETUP_TICK = -1

T = TypeVar("T")


def splitmix64(value: int) -> int:
    z = (value + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, run_index: int, tick: int) -> int:
    h = splitmix64(master_seed & MASK64)
    h = splitmix64(h ^ (run_index & MASK64))
    return splitmix64(h ^ ((tick + 1) & MASK64))


class PCG32:
    """Permuted congruential generator, XSH-RR output.

    Reference: https://www.pcg-random.org/
    """

    MULTIPLIER = 6364136223846793005

    def __init__(self, seed: int, stream: int = 0):
        self.increment = ((stream << 1) | 1) & MASK64
        self.state = 0
        self._step()
        self.state = (self.state + seed) & MASK64
        self._step()

    @classmethod
    def for_tick(cls, master_seed: int, run_index: int, tick: int) -> "PCG32":
        return cls(derive_seed(master_seed, run_index, tick), stream=run_index)

    def _step(self) -> None:
        self.state = (self.state * self.MULTIPLIER + self.increment) & MASK64

    def next_u32(self) -> int:
        old = self.state
        self._step()
        xorshifted = (((old >> 18) ^ old) >> 27) & MASK32
        rot = old >> 59
        return ((xorshifted >> rot) | (xorshifted << ((-rot) & 31))) & MASK32

    def uniform(self) -> float:
        """Uniform float in [0, 1)."""
        return self.next_u32() / (MASK32 + 1)

    def bounded(self, bound: int) -> int:
        """Uniform integer in [0, bound), by rejection sampling."""
        if bound <= 0:
            raise ValueError("Bound must be positive")
        threshold = ((MASK32 + 1) - bound) % bound
        while True:
            r = self.next_u32()
            if r >= threshold:
                return r % bound

    def shuffle(self, items: Sequence[T]) -> list[T]:
        """Fisher-Yates shuffle; returns a new list."""
        result = list(items)
        for i in range(len(result) - 1, 0, -1):
            j = self.bounded(i + 1)
            result[i], result[j] = result[j], result[i]
        return result

    def sample(self, population: Sequence[T], k: int) -> list[T]:
        """k distinct elements, by partial Fisher-Yates."""
        n = len(population)
        if not 0 <= k <= n:
            raise ValueError(f"Cannot sample {k} from {n} elements")
        pool = list(population)
        picked = []
        for i in range(k):
            j = self.bounded(n - i)
            picked.append(pool[j])
            pool[j] = pool[n - 1 - i]
        return picked
