"""Platform-independent random streams.

Every random decision in the pipeline goes through :class:`Rng`, a
xoshiro256** generator whose 256-bit state is filled by four successive
splitmix64 outputs.  The draw rules are fixed so that another implementation
following them reproduces the same datasets bit for bit:

* ``next_u64``      one raw xoshiro256** output.
* ``uniform``       ``(u64 >> 11) * 2**-53``, one draw, in ``[0, 1)``.
* ``below(n)``      rejection sampling: draw ``x`` until
                    ``x < 2**64 - (2**64 mod n)``, return ``x mod n``.
* ``normal(n)``     polar Box-Muller.  Each attempt consumes two draws
                    ``u = 2*uniform - 1``, ``v = 2*uniform - 1``; it is
                    rejected when ``s = u*u + v*v`` is 0 or >= 1, otherwise it
                    yields the pair ``u*f, v*f`` with ``f = sqrt(-2 ln s / s)``.
                    ``ceil(n/2)`` pairs are produced; an odd trailing spare is
                    discarded.
* ``shuffle``       Fisher-Yates from the last index down to 1, swapping
                    ``i`` with ``below(i + 1)``.

Bulk loops are compiled with numba; the state lives in a ``uint64[4]`` array.
"""

from __future__ import annotations

import numba
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

# stream ids for derive_seed
STREAM_NEGATIVES = 1
STREAM_UNDERSAMPLE = 2
STREAM_SUBSAMPLE = 3
STREAM_SPLIT = 4
STREAM_INIT = 5
STREAM_TRAIN = 6
STREAM_SYNTH = 7


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; return ``(new_state, output)``."""
    state = (state + GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def derive_seed(seed: int, *keys: int) -> int:
    """Mix integer keys into a seed: ``s = splitmix64(s ^ key)`` per key."""
    s = seed & MASK64
    for key in keys:
        _, s = splitmix64(s ^ (key & MASK64))
    return s


@numba.njit(cache=True)
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@numba.njit(cache=True)
def _next(s):
    result = _rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@numba.njit(cache=True)
def _fill_u64(s, out):
    for i in range(out.shape[0]):
        out[i] = _next(s)


@numba.njit(cache=True)
def _uniform(s):
    return np.float64(_next(s) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@numba.njit(cache=True)
def _fill_uniform(s, out):
    for i in range(out.shape[0]):
        out[i] = _uniform(s)


@numba.njit(cache=True)
def _below(s, n):
    n = np.uint64(n)
    # 2**64 mod n, computed in wrapping uint64 arithmetic
    rem = (np.uint64(0) - n) % n
    limit = np.uint64(0) - rem  # 0 means "no rejection needed"
    while True:
        x = _next(s)
        if limit == np.uint64(0) or x < limit:
            return np.int64(x % n)


@numba.njit(cache=True)
def _fill_normal(s, out):
    n = out.shape[0]
    i = 0
    while i < n:
        u = 2.0 * _uniform(s) - 1.0
        v = 2.0 * _uniform(s) - 1.0
        q = u * u + v * v
        if q == 0.0 or q >= 1.0:
            continue
        f = np.sqrt(-2.0 * np.log(q) / q)
        out[i] = u * f
        if i + 1 < n:
            out[i + 1] = v * f
        i += 2


@numba.njit(cache=True)
def _shuffle(s, arr):
    for i in range(arr.shape[0] - 1, 0, -1):
        j = _below(s, i + 1)
        tmp = arr[i]
        arr[i] = arr[j]
        arr[j] = tmp


class Rng:
    """xoshiro256** stream seeded through splitmix64."""

    def __init__(self, seed: int):
        sm = seed & MASK64
        words = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            words.append(out)
        self.state = np.array(words, dtype=np.uint64)

    @classmethod
    def derived(cls, seed: int, *keys: int) -> "Rng":
        return cls(derive_seed(seed, *keys))

    def next_u64(self) -> int:
        return int(_next(self.state))

    def u64(self, n: int) -> np.ndarray:
        out = np.empty(n, dtype=np.uint64)
        _fill_u64(self.state, out)
        return out

    def uniform(self, n: int) -> np.ndarray:
        out = np.empty(n, dtype=np.float64)
        _fill_uniform(self.state, out)
        return out

    def below(self, n: int) -> int:
        if n <= 0:
            raise ValueError("below() needs n >= 1")
        return int(_below(self.state, n))

    def normal(self, n: int) -> np.ndarray:
        out = np.empty(n, dtype=np.float64)
        _fill_normal(self.state, out)
        return out

    def shuffle(self, arr: np.ndarray) -> None:
        """In-place Fisher-Yates shuffle of a 1-D integer array."""
        _shuffle(self.state, arr)

    def permutation(self, n: int) -> np.ndarray:
        arr = np.arange(n, dtype=np.int64)
        _shuffle(self.state, arr)
        return arr
