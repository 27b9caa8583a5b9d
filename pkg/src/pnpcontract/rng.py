"""Deterministic random generator used for every seeded draw in the package.

The bit generator is xoshiro256** (Blackman & Vigna), a 64-bit
xorshift-family generator, with the state seeded from a single 64-bit
integer through SplitMix64.  The algorithm is spelled out here so a
reimplementation in another language can reproduce any campaign from the
seed alone:

* SplitMix64: ``s += 0x9E3779B97F4A7C15``; ``z = s``;
  ``z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9``;
  ``z = (z ^ (z >> 27)) * 0x94D049BB133111EB``; output ``z ^ (z >> 31)``.
  Four successive outputs initialize the xoshiro state.
* xoshiro256** next: ``out = rotl(s1 * 5, 7) * 9``; ``t = s1 << 17``;
  ``s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3; s2 ^= t; s3 = rotl(s3, 45)``.
* doubles: top 53 bits, ``(out >> 11) * 2**-53`` in [0, 1).
* normals: Box-Muller on consecutive double pairs, the first double
  redrawn while zero; the second variate of each pair is served next.
* index sampling: Fisher-Yates shuffle driven by ``randbelow`` (rejection
  sampling on the high 64 bits).
"""

from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


class Xoshiro256:
    """xoshiro256** stream seeded from one 64-bit integer via SplitMix64."""

    def __init__(self, seed: int):
        sm = seed & _MASK
        state = []
        for _ in range(4):
            sm = (sm + 0x9E3779B97F4A7C15) & _MASK
            z = sm
            z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
            z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
            state.append(z ^ (z >> 31))
        self._s = state
        self._spare_normal: float | None = None

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        out = (_rotl((s1 * 5) & _MASK, 7) * 9) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return out

    def random(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        if size is None:
            return low + (high - low) * self.random()
        flat = np.array([self.random() for _ in range(int(np.prod(size)))])
        return low + (high - low) * flat.reshape(size)

    def normal(self) -> float:
        if self._spare_normal is not None:
            z = self._spare_normal
            self._spare_normal = None
            return z
        u1 = self.random()
        while u1 == 0.0:
            u1 = self.random()
        u2 = self.random()
        r = math.sqrt(-2.0 * math.log(u1))
        self._spare_normal = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)

    def normals(self, size) -> np.ndarray:
        flat = np.array([self.normal() for _ in range(int(np.prod(size)))])
        return flat.reshape(size)

    def randbelow(self, bound: int) -> int:
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = _MASK - (_MASK % bound + 1) % bound
        while True:
            x = self.next_u64()
            if x <= limit:
                return x % bound

    def permutation(self, n: int) -> np.ndarray:
        idx = np.arange(n)
        for i in range(n - 1, 0, -1):
            j = self.randbelow(i + 1)
            idx[i], idx[j] = idx[j], idx[i]
        return idx

    def sample_indices(self, n: int, k: int) -> np.ndarray:
        """k distinct indices from range(n), order-insensitive use only."""
        if not 0 <= k <= n:
            raise ValueError(f"cannot sample {k} of {n}")
        return np.sort(self.permutation(n)[:k])

    def unit_vector(self, n: int) -> np.ndarray:
        v = self.normals(n)
        nrm = float(np.linalg.norm(v))
        while nrm == 0.0:  # astronomically unlikely; keeps the contract total
            v = self.normals(n)
            nrm = float(np.linalg.norm(v))
        return v / nrm
