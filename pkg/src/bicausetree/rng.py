"""Deterministic random variate generation on a counter-based core.

The raw stream is SplitMix64: output ``i`` (1-based) is ``mix64(seed + i*PHI)``
where ``PHI = 0x9E3779B97F4A7C15`` and ``mix64`` is the standard
xor-shift-multiply finalizer (multipliers ``0xBF58476D1CE4E5B9`` and
``0x94D049BB133111EB``, shifts 30/27/31), all arithmetic modulo 2**64.
Each output depends only on ``(seed, i)``, so streams reproduce exactly across
platforms and processes; an instance merely tracks how many outputs it has
consumed.  The variate transforms are pinned as part of the stream contract:

* ``uniform``: top 53 bits of one output scaled by 2**-53, giving [0, 1).
* ``normal``: Box-Muller on pairs (u1 in (0, 1], u2 in [0, 1)); a batch of n
  draws consumes ceil(n/2) pairs, the u1 block first, then the u2 block.
* ``bernoulli``: one uniform per draw, success iff u < p.
* ``integers``: floor(u * upper) for one uniform u.
* ``truncated_normal``: rejection from ``normal`` batches sized to the number
  of still-unfilled slots.
* ``permutation``: stable argsort of n uniforms.
"""

from __future__ import annotations

import math

import numpy as np

_PHI = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_SCALE53 = 2.0 ** -53


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _std_normal_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


class CounterRng:
    """Counter-based SplitMix64 stream with vectorized transforms.

    Args:
        seed: any integer; reduced modulo 2**64.
    """

    def __init__(self, seed: int) -> None:
        if not isinstance(seed, (int, np.integer)):
            raise TypeError("seed must be an integer")
        self._seed = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
        self._count = 0

    @property
    def draws_taken(self) -> int:
        return self._count

    def raw(self, n: int) -> np.ndarray:
        """Return the next ``n`` raw 64-bit outputs as uint64."""
        if n < 0:
            raise ValueError("n must be non-negative")
        idx = np.arange(self._count + 1, self._count + n + 1, dtype=np.uint64)
        self._count += n
        return _mix64(self._seed + idx * _PHI)

    def uniform(self, n: int) -> np.ndarray:
        """Return ``n`` uniforms on [0, 1)."""
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * _SCALE53

    def normal(self, n: int, mean: float = 0.0, sd: float = 1.0) -> np.ndarray:
        """Return ``n`` normal draws via Box-Muller."""
        if sd <= 0.0:
            raise ValueError("sd must be positive")
        pairs = (n + 1) // 2
        u1 = ((self.raw(pairs) >> np.uint64(11)) + np.uint64(1)).astype(np.float64) * _SCALE53
        u2 = self.uniform(pairs)
        radius = np.sqrt(-2.0 * np.log(u1))
        theta = (2.0 * math.pi) * u2
        z = np.empty(2 * pairs, dtype=np.float64)
        z[0::2] = radius * np.cos(theta)
        z[1::2] = radius * np.sin(theta)
        return mean + sd * z[:n]

    def bernoulli(self, p, n: int | None = None) -> np.ndarray:
        """Return 0/1 draws; ``p`` may be a scalar or a length-n vector."""
        p_arr = np.asarray(p, dtype=np.float64)
        if p_arr.ndim == 0:
            if n is None:
                raise ValueError("n is required with scalar p")
            size = n
        else:
            size = p_arr.shape[0]
            if n is not None and n != size:
                raise ValueError("n disagrees with len(p)")
        if np.any(p_arr < 0.0) or np.any(p_arr > 1.0):
            raise ValueError("p must lie in [0, 1]")
        return (self.uniform(size) < p_arr).astype(np.int8)

    def integers(self, upper: int, n: int) -> np.ndarray:
        """Return ``n`` draws uniform over {0, ..., upper-1}."""
        if upper <= 0:
            raise ValueError("upper must be positive")
        vals = np.floor(self.uniform(n) * upper).astype(np.int64)
        return np.minimum(vals, upper - 1)

    def permutation(self, n: int) -> np.ndarray:
        """Return a uniform permutation of range(n)."""
        return np.argsort(self.uniform(n), kind="stable")

    def truncated_normal(
        self, mean: float, sd: float, low: float, high: float, n: int
    ) -> np.ndarray:
        """Return ``n`` normal draws conditioned on [low, high] by rejection.

        Raises:
            ValueError: if ``low >= high``, ``sd <= 0``, or the interval holds
                less than 1e-6 of the normal mass (rejection would stall).
        """
        if low >= high:
            raise ValueError("low must be strictly less than high")
        if sd <= 0.0:
            raise ValueError("sd must be positive")
        mass = _std_normal_cdf((high - mean) / sd) - _std_normal_cdf((low - mean) / sd)
        if mass < 1e-6:
            raise ValueError(
                f"acceptance probability {mass:.3g} below 1e-6 for "
                f"interval [{low}, {high}] around mean={mean}, sd={sd}"
            )
        out = np.empty(n, dtype=np.float64)
        filled = 0
        while filled < n:
            draw = self.normal(n - filled, mean, sd)
            keep = draw[(draw >= low) & (draw <= high)]
            out[filled : filled + keep.size] = keep
            filled += keep.size
        return out
