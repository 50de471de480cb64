"""Deterministic pseudo-random streams.

Every stochastic choice in the toolkit (masks, noise, weight init, latent
init, dataset synthesis) is drawn from a splitmix64 stream so that runs are
reproducible bit-for-bit from their seeds, independent of library versions.

Conventions, fixed once for the whole artifact:

- splitmix64 with increment 0x9E3779B97F4A7C15,
- uniforms in [0, 1) as ``(u64 >> 11) * 2**-53``,
- standard Gaussians by Box-Muller on consecutive uniform pairs,
- permutations by a descending Fisher-Yates loop with ``j = u64 % (i + 1)``.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB


def _mix(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX_A) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX_B) & _MASK64
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_MIX_A)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_MIX_B)
    z ^= z >> np.uint64(31)
    return z


def derive_seed(master: int, *indices: int) -> int:
    """Fold integer indices into a master seed, one scramble per index.

    Used to give sweep points, test images and solvers independent
    streams that depend only on (master_seed, index path).
    """
    state = master & _MASK64
    for ix in indices:
        state = _mix((state + (int(ix) + 1) * _GAMMA) & _MASK64)
    return state


class SplitMix64:
    """Stateful splitmix64 stream with scalar and vectorized draws.

    Vectorized draws consume exactly the same underlying u64 sequence as
    the equivalent run of scalar calls, so mixing the two styles never
    changes downstream values.
    """

    def __init__(self, seed: int):
        self._state = int(seed) & _MASK64
        self._gauss_spare: float | None = None

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return _mix(self._state)

    def u64_array(self, count: int) -> np.ndarray:
        if count <= 0:
            return np.empty(0, dtype=np.uint64)
        idx = np.arange(1, count + 1, dtype=np.uint64)
        states = np.uint64(self._state) + idx * np.uint64(_GAMMA)
        self._state = (self._state + count * _GAMMA) & _MASK64
        return _mix_array(states)

    def next_float(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def floats(self, count: int) -> np.ndarray:
        return (self.u64_array(count) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.next_float()

    def gaussians(self, count: int) -> np.ndarray:
        """Draw ``count`` standard normal deviates.

        Box-Muller pairs are generated from consecutive uniforms; an odd
        request caches the spare deviate for the next call.
        """
        out = np.empty(count, dtype=np.float64)
        pos = 0
        if count > 0 and self._gauss_spare is not None:
            out[0] = self._gauss_spare
            self._gauss_spare = None
            pos = 1
        remaining = count - pos
        if remaining > 0:
            pairs = (remaining + 1) // 2
            u = self.floats(2 * pairs)
            u1 = np.where(u[0::2] == 0.0, 2.0**-53, u[0::2])
            u2 = u[1::2]
            radius = np.sqrt(-2.0 * np.log(u1))
            angle = 2.0 * np.pi * u2
            z = np.empty(2 * pairs, dtype=np.float64)
            z[0::2] = radius * np.cos(angle)
            z[1::2] = radius * np.sin(angle)
            out[pos:] = z[:remaining]
            self._gauss_spare = float(z[remaining]) if remaining < 2 * pairs else None
        return out

    def next_gaussian(self) -> float:
        return float(self.gaussians(1)[0])

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of range(n), descending swap order."""
        perm = np.arange(n, dtype=np.int64)
        for i in range(n - 1, 0, -1):
            j = self.next_u64() % (i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm
