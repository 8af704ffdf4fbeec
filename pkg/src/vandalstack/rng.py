"""Deterministic randomness for the whole pipeline.

One 64-bit master seed reproduces every random decision: sampling, fold
assignment and each model's internal randomness all obtain their seeds
through :func:`derive_seed`, which is pure integer mixing and therefore
identical on every platform and process.

The sampling stage uses an explicit xoshiro256** generator (seeded through
splitmix64) so that the exact subset drawn is pinned by this module rather
than by any library version.  The numeric learners use numpy's PCG64
``Generator`` keyed by a derived seed.
"""

from __future__ import annotations

import numpy as np

M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state once; return ``(new_state, output)``."""
    state = (state + _GOLDEN) & M64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
    return state, (z ^ (z >> 31)) & M64


def derive_seed(master: int, tag: str, index: int = 0) -> int:
    """Derive a 64-bit seed from ``(master, tag, index)``.

    The tag bytes are absorbed one at a time into a splitmix64 walk, the
    index is mixed in last.  Distinct (tag, index) pairs give independent
    streams for all practical purposes.
    """
    state = master & M64
    for byte in tag.encode("utf-8"):
        # absorb through the mixed output, not the raw +GOLDEN counter:
        # counter states of same-length tags differ only in low bits and
        # would collide with each other under the index XOR below
        _, state = splitmix64(state ^ byte)
    state ^= index & M64
    _, out = splitmix64(state)
    return out


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & M64


class Xoshiro256StarStar:
    """xoshiro256** with the reference state initialisation via splitmix64."""

    def __init__(self, seed: int):
        state = seed & M64
        s = []
        for _ in range(4):
            state, out = splitmix64(state)
            s.append(out)
        self._s = s

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & M64, 7) * 9) & M64
        t = (s1 << 17) & M64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def randbelow(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` by rejection — no modulo bias."""
        if n <= 0:
            raise ValueError("randbelow needs a positive bound")
        span = M64 + 1
        limit = span - span % n
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n


def sample_without_replacement(n: int, k: int, rng: Xoshiro256StarStar) -> list[int]:
    """Draw ``k`` distinct indices from ``range(n)``, uniformly.

    Partial Fisher-Yates over a sparse (dict-backed) permutation, so memory
    is O(k) even when ``n`` is the size of a full corpus.
    """
    if not 0 <= k <= n:
        raise ValueError(f"cannot draw {k} items from {n}")
    swapped: dict[int, int] = {}
    out = []
    for i in range(k):
        j = i + rng.randbelow(n - i)
        out.append(swapped.get(j, j))
        swapped[j] = swapped.get(i, i)
    return out


def generator(seed: int) -> np.random.Generator:
    """The numpy generator used inside the learners, keyed by a derived seed."""
    return np.random.Generator(np.random.PCG64(seed & M64))
