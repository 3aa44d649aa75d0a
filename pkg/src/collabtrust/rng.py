"""Bit-exact SplitMix64 randomness for all simulation streams.

Every random draw in the simulator comes from one of these streams, so two
runs with the same seed produce identical results on any platform. Python's
own `random` module is deliberately not used anywhere in the package.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

# Weyl-sequence increment ("golden gamma") from the reference SplitMix64.
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

_MIX_MUL_1 = 0xBF58476D1CE4E5B9
_MIX_MUL_2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """SplitMix64 output finalizer: avalanche a 64-bit word."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX_MUL_1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX_MUL_2) & MASK64
    return z ^ (z >> 31)


def mix_words(*words: int) -> int:
    """Fold integers into one 64-bit hash by iterating the finalizer.

    Used to derive independent stream seeds (per round/device/routine,
    per named subsystem) from a single scenario seed.
    """
    h = 0
    for w in words:
        h = mix64((h + GOLDEN_GAMMA + (w & MASK64)) & MASK64)
    return h


class SplitMix64:
    """The reference SplitMix64 generator.

    State advances by the golden gamma; each output is the finalized state.
    Matches the published test vectors (seed 0 -> 0xE220A8397B1DCDAF, ...).
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + GOLDEN_GAMMA) & MASK64
        return mix64(self._state)

    def next_bits(self, width: int) -> int:
        """One draw masked to the low `width` bits."""
        return self.next_u64() & ((1 << width) - 1)

    def next_float(self) -> float:
        """Uniform in [0, 1) with 53 bits of resolution."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def below(self, n: int) -> int:
        """Unbiased uniform integer in [0, n). Consumes no draw when n == 1."""
        if n <= 0:
            raise ValueError(f"below() needs n >= 1, got {n}")
        if n == 1:
            return 0
        # Rejection sampling keeps the distribution exactly uniform.
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def shuffle_prefix(self, items: list, k: int) -> None:
        """Fisher-Yates the first `k` positions of `items` in place."""
        n = len(items)
        if not 0 <= k <= n:
            raise ValueError(f"prefix length {k} out of range for {n} items")
        for i in range(k):
            j = i + self.below(n - i)
            items[i], items[j] = items[j], items[i]
