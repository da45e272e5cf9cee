"""Seeded portable random numbers for synthetic measurement noise.

xoshiro256** (public-domain algorithm by Blackman/Vigna) seeded through
splitmix64, with Gaussian variates via Box-Muller on 53-bit uniforms.  The
generator is fully specified here so that noisy fixtures reproduce exactly
across implementations and platforms, which numpy's default generator does
not promise across versions.
"""

from __future__ import annotations

import math

__all__ = ["PortableRng"]

_MASK = (1 << 64) - 1


def _splitmix64(state):
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & _MASK


class PortableRng:
    """Deterministic stream of uniforms/Gaussians from a 64-bit seed."""

    def __init__(self, seed):
        state = seed & _MASK
        self._s = []
        for _ in range(4):
            state, word = _splitmix64(state)
            self._s.append(word)
        self._gauss_cache = None

    def next_u64(self):
        s = self._s
        result = (_rotl((s[1] * 5) & _MASK, 7) * 9) & _MASK
        t = (s[1] << 17) & _MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def uniform(self):
        """Uniform in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (2.0**-53)

    def gauss(self):
        """Standard normal via Box-Muller (pairs cached)."""
        if self._gauss_cache is not None:
            value, self._gauss_cache = self._gauss_cache, None
            return value
        while True:
            u1 = self.uniform()
            if u1 > 0.0:
                break
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        self._gauss_cache = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)

    def gauss_array(self, n):
        return [self.gauss() for _ in range(n)]
