"""PRNG correctness against the published algorithms.

The splitmix64 outputs for state 0 are the widely circulated reference
vectors; the xoshiro256** sequence is cross-checked against an independent
reimplementation on numpy uint64 arithmetic.
"""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from gaussad.rng import Xoshiro256StarStar, shuffled_indices, splitmix64_next

SPLITMIX_ZERO_VECTORS = [
    0xE220A8397B1DCDAF,
    0x6E789E6AA1B965F4,
    0x06C45D188009454F,
    0xF88BB8A8724C81EC,
]

# first outputs of xoshiro256** seeded via splitmix64 from the given seed,
# frozen from the independent reimplementation below
XOSHIRO_FIRST = {
    0: [0x99EC5F36CB75F2B4, 0xBF6E1F784956452A, 0x1A5F849D4933E6E0],
    42: [0x15780B2E0C2EC716, 0x6104D9866D113A7E, 0xAE17533239E499A1],
}


def reference_xoshiro(seed: int, count: int) -> list:
    """Independent xoshiro256** on numpy uint64 wraparound arithmetic."""
    with np.errstate(over="ignore"):
        s = np.zeros(4, dtype=np.uint64)
        state = np.uint64(seed)
        gamma = np.uint64(0x9E3779B97F4A7C15)
        m1 = np.uint64(0xBF58476D1CE4E5B9)
        m2 = np.uint64(0x94D049BB133111EB)
        for i in range(4):
            state = state + gamma
            z = state
            z = (z ^ (z >> np.uint64(30))) * m1
            z = (z ^ (z >> np.uint64(27))) * m2
            s[i] = z ^ (z >> np.uint64(31))

        def rotl(x, k):
            return (x << np.uint64(k)) | (x >> np.uint64(64 - k))

        out = []
        for _ in range(count):
            out.append(int(rotl(s[1] * np.uint64(5), 7) * np.uint64(9)))
            t = s[1] << np.uint64(17)
            s[2] ^= s[0]
            s[3] ^= s[1]
            s[1] ^= s[2]
            s[0] ^= s[3]
            s[2] ^= t
            s[3] = rotl(s[3], 45)
        return out


def test_splitmix_zero_state_vectors():
    state = 0
    outs = []
    for _ in range(4):
        state, o = splitmix64_next(state)
        outs.append(o)
    assert outs == SPLITMIX_ZERO_VECTORS


def test_xoshiro_frozen_first_outputs():
    for seed, expected in XOSHIRO_FIRST.items():
        gen = Xoshiro256StarStar(seed)
        assert [gen.next_u64() for _ in range(len(expected))] == expected


def test_xoshiro_matches_independent_reimplementation():
    for seed in (0, 1, 42, 123456789, 2**64 - 1):
        gen = Xoshiro256StarStar(seed)
        assert [gen.next_u64() for _ in range(100)] == reference_xoshiro(seed, 100)


def test_outputs_fit_in_64_bits():
    gen = Xoshiro256StarStar(7)
    for _ in range(1000):
        v = gen.next_u64()
        assert 0 <= v < 2**64


def test_shuffle_is_deterministic():
    assert shuffled_indices(10, 42) == shuffled_indices(10, 42)
    assert shuffled_indices(10, 42) != shuffled_indices(10, 43)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(min_value=1, max_value=300), seed=st.integers(min_value=0, max_value=2**64 - 1))
def test_shuffle_is_a_permutation(n, seed):
    assert sorted(shuffled_indices(n, seed)) == list(range(n))


def test_shuffle_visits_every_arrangement_of_three():
    # with 3 items all 6 orders should appear across seeds (sanity that the
    # swap loop is not degenerate)
    seen = {tuple(shuffled_indices(3, seed)) for seed in range(200)}
    assert len(seen) == 6
