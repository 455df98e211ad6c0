"""Seedable 64-bit generators: splitmix64 for seeding, xoshiro256** for streams.

The pure-Python classes are the reference; the chaos-game kernels carry a
compiled copy of ``xoshiro_next`` that operates on the same 4-word state.
"""
import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed):
        self.state = seed & MASK64

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256StarStar:
    def __init__(self, state):
        state = [int(s) & MASK64 for s in state]
        if len(state) != 4 or not any(state):
            raise ValueError("state must be four 64-bit words, not all zero")
        self.s = state

    @classmethod
    def from_seed(cls, seed):
        sm = SplitMix64(seed)
        return cls([sm.next() for _ in range(4)])

    def next(self):
        s = self.s
        result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 17) & MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def random(self):
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next() >> 11) * 2.0**-53


def seed_state(seed):
    """xoshiro256** state array seeded from ``seed`` through splitmix64."""
    sm = SplitMix64(seed)
    return np.array([sm.next() for _ in range(4)], dtype=np.uint64)


@njit(inline="always")
def _rotl_u64(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit(inline="always")
def xoshiro_next(s):
    result = _rotl_u64(s[1] * np.uint64(5), 7) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl_u64(s[3], 45)
    return result


@njit(inline="always")
def xoshiro_random(s):
    return np.float64(xoshiro_next(s) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit
def draw_raw(s, count):
    out = np.empty(count, dtype=np.uint64)
    for i in range(count):
        out[i] = xoshiro_next(s)
    return out
