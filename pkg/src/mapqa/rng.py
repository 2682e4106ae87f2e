"""Deterministic random numbers with a fixed, documented algorithm.

Everything stochastic in this package (synthetic images, split shuffles,
toy-network weights) flows from a single 64-bit seed through the splitmix64
generator.  The generator is counter-based: draw i of a stream seeded with s
is ``mix64(s + (i+1) * GOLDEN)``, so filling an array in one vectorized call
produces exactly the same values as repeated scalar draws.  That property is
what makes every CLI command byte-reproducible regardless of batching or
thread count.

numpy's own Generator is deliberately not used here: its bit streams are not
guaranteed stable across numpy versions, and reproducibility of emitted files
is part of this package's contract.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer on a uint64 array (wrapping arithmetic)."""
    with np.errstate(over="ignore"):  # wraparound is the algorithm, not an error
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def derive(seed: int, *labels) -> int:
    """Fold labels (ints or strings) into a seed, giving an independent substream.

    Used to hand each repetition / image / purpose its own stream without any
    coordination: ``derive(seed, "split", rep)``.
    """
    h = np.uint64(seed & _MASK)
    for label in labels:
        if isinstance(label, (int, np.integer)):
            data = int(label & _MASK).to_bytes(8, "little")
        elif isinstance(label, str):
            data = label.encode("utf-8")
        else:
            raise TypeError(f"labels must be int or str, got {type(label).__name__}")
        h = _mix(h ^ np.uint64(len(data)))
        with np.errstate(over="ignore"):
            for b in data:
                h = _mix((h + _GOLDEN) ^ np.uint64(b))
    return int(h)


class Rng:
    """Counter-based splitmix64 stream."""

    def __init__(self, seed: int):
        self._seed = np.uint64(seed & _MASK)
        self._counter = 0

    def _raw(self, n: int) -> np.ndarray:
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        with np.errstate(over="ignore"):
            return _mix(self._seed + idx * _GOLDEN)

    def next_u64(self) -> int:
        return int(self._raw(1)[0])

    def uniform(self, shape=None) -> np.ndarray:
        """Floats in [0, 1) with 53-bit resolution."""
        n = 1 if shape is None else int(np.prod(shape))
        vals = (self._raw(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        if shape is None:
            return float(vals[0])
        return vals.reshape(shape)

    def normal(self, shape=None) -> np.ndarray:
        """Standard normals via Box-Muller (pairs drawn from one uniform block)."""
        n = 1 if shape is None else int(np.prod(shape))
        m = (n + 1) // 2
        raw = self._raw(2 * m)
        # u1 in (0, 1] so the log is finite; u2 in [0, 1).
        u1 = ((raw[:m] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
        u2 = (raw[m:] >> np.uint64(11)).astype(np.float64) * 2.0**-53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        vals = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
        if shape is None:
            return float(vals[0])
        return vals.reshape(shape)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection (no modulo bias)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        threshold = ((1 << 64) // bound) * bound
        while True:
            v = self.next_u64()
            if v < threshold:
                return v % bound

    def integers(self, low: int, high: int, shape=None):
        """Uniform integers in [low, high)."""
        span = high - low
        n = 1 if shape is None else int(np.prod(shape))
        vals = np.array([low + self.below(span) for _ in range(n)], dtype=np.int64)
        if shape is None:
            return int(vals[0])
        return vals.reshape(shape)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
