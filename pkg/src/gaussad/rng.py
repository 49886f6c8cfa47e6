"""Deterministic 64-bit PRNG for reproducible data splits.

The generator is xoshiro256** with its 256-bit state seeded from four
consecutive outputs of splitmix64, exactly as the reference implementation
recommends. Both algorithms are fixed by this module (not delegated to a
library) so that a fold split is reproducible from the seed alone in any
implementation of the same formats.

splitmix64 (Steele, Lea, Flood 2014): z += 0x9E3779B97F4A7C15;
z = (z ^ z>>30) * 0xBF58476D1CE4E5B9; z = (z ^ z>>27) * 0x94D049BB133111EB;
return z ^ z>>31.

xoshiro256** (Blackman, Vigna 2018): output rotl(s1*5, 7)*9, then the
linear state transition with shifts 17/45.

Shuffling is the standard Fisher-Yates walk from the top index down, with
j drawn as next() mod (i+1). The modulo bias is below 2^-45 for any
realistic n and is part of the fixed contract.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1


def splitmix64_next(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


class Xoshiro256StarStar:
    """xoshiro256** seeded from splitmix64(seed)."""

    def __init__(self, seed: int):
        state = seed & _MASK
        s = []
        for _ in range(4):
            state, out = splitmix64_next(state)
            s.append(out)
        self._s = s

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK, 7) * 9) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle, top index down, j = next() mod (i+1)."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_u64() % (i + 1)
            items[i], items[j] = items[j], items[i]


def shuffled_indices(n: int, seed: int) -> list[int]:
    """The permutation of range(n) produced by seed; basis of every split."""
    idx = list(range(n))
    Xoshiro256StarStar(seed).shuffle(idx)
    return idx
