"""Deterministic 64-bit PRNG (splitmix64 seeding + xoshiro256**).

Pure shift/rotate/multiply arithmetic on uint64, so streams are identical
on every platform for a given seed.  Constants are the published ones from
Blackman & Vigna's xoshiro256** and Steele et al.'s splitmix64.
"""

from __future__ import annotations

import numpy as np

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)


def splitmix64_next(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & 0xFFFFFFFFFFFFFFFF


class Xoshiro256StarStar:
    """xoshiro256** seeded through splitmix64 from a single 64-bit seed."""

    def __init__(self, seed: int):
        self.seed = seed & 0xFFFFFFFFFFFFFFFF
        s = self.seed
        state = []
        for _ in range(4):
            s, out = splitmix64_next(s)
            state.append(out)
        self._s = state

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & 0xFFFFFFFFFFFFFFFF, 7) * 9) & 0xFFFFFFFFFFFFFFFF
        t = (s[1] << 17) & 0xFFFFFFFFFFFFFFFF
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def u64_array(self, n: int) -> np.ndarray:
        out = np.empty(n, dtype=np.uint64)
        for i in range(n):
            out[i] = self.next_u64()
        return out

    def uniform(self, n: int) -> np.ndarray:
        """n doubles uniform on (0, 1] (never exactly 0, safe under log)."""
        bits = self.u64_array(n)
        return ((bits >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53

    def bits(self, n: int) -> np.ndarray:
        """n fair 0/1 draws (top bit of each word)."""
        return (self.u64_array(n) >> np.uint64(63)).astype(np.uint8)

    def randint_below(self, bound: int) -> int:
        # rejection sampling keeps the draw unbiased
        limit = (0x10000000000000000 // bound) * bound
        while True:
            x = self.next_u64()
            if x < limit:
                return x % bound

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of range(n)."""
        idx = np.arange(n, dtype=np.int64)
        for i in range(n - 1, 0, -1):
            j = self.randint_below(i + 1)
            idx[i], idx[j] = idx[j], idx[i]
        return idx
