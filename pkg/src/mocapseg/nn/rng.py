"""Counter-based deterministic random stream.

The generator is SplitMix64 applied to a (seed, counter) pair:

    value(seed, i) = mix64(seed + (i + 1) * GOLDEN)   mod 2^64

with the standard SplitMix64 finalizer ``mix64``. The algorithm is fixed by
this module, not borrowed from a library, so the draw sequence for a given
seed is identical on every platform and numpy version. Streams are cheap to
fork: ``derive`` folds integer keys into a new seed, which is how per-layer,
per-sequence, and per-fold streams stay independent of iteration order.

All randomness in the package (weight init, dropout masks, label noise,
synthetic data) flows through RngStream.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64


def _mix64(z: np.ndarray | np.uint64) -> np.ndarray | np.uint64:
    # SplitMix64 finalizer; uint64 arithmetic wraps mod 2^64.
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


class RngStream:
    """Deterministic stream of draws identified by (seed, counter)."""

    def __init__(self, seed: int, counter: int = 0):
        self.seed = _U64(seed & 0xFFFFFFFFFFFFFFFF)
        self.counter = _U64(counter)

    def derive(self, *keys: int) -> "RngStream":
        """Fork an independent child stream keyed by integers."""
        s = self.seed
        with np.errstate(over="ignore"):
            for k in keys:
                s = _mix64(s ^ _mix64((_U64(k & 0xFFFFFFFFFFFFFFFF) + _U64(1)) * _GOLDEN))
        return RngStream(int(s))

    def _raw(self, count: int) -> np.ndarray:
        with np.errstate(over="ignore"):
            idx = self.counter + _U64(1) + np.arange(count, dtype=np.uint64)
            out = _mix64(self.seed + idx * _GOLDEN)
            self.counter = self.counter + _U64(count)
        return out

    def uniform(self, size=None, low: float = 0.0, high: float = 1.0):
        """Uniform float64 draws in [low, high); 53-bit mantissa resolution."""
        n = 1 if size is None else int(np.prod(size))
        u = (self._raw(n) >> _U64(11)).astype(np.float64) * (2.0 ** -53)
        u = low + (high - low) * u
        if size is None:
            return float(u[0])
        return u.reshape(size)

    def integers(self, upper: int, size=None):
        """Uniform integer draws in [0, upper)."""
        if upper <= 0:
            raise ValueError("upper must be positive")
        n = 1 if size is None else int(np.prod(size))
        u = (self._raw(n) >> _U64(11)).astype(np.float64) * (2.0 ** -53)
        v = np.minimum((u * upper).astype(np.int64), upper - 1)
        if size is None:
            return int(v[0])
        return v.reshape(size)

    def permutation(self, n: int) -> np.ndarray:
        """A uniformly random permutation of range(n)."""
        return np.argsort(self._raw(n), kind="stable")

    def choice_without_replacement(self, n: int, k: int) -> np.ndarray:
        """k distinct indices from range(n), order deterministic for the stream."""
        if not 0 <= k <= n:
            raise ValueError("need 0 <= k <= n")
        return self.permutation(n)[:k]
