"""Counter-based splitmix64 stream, bit-compatible with the consumer toolkit.

The toy archive is committed to the consumer repository and regenerated
from a seed, so the generator here must keep producing the exact same
bytes forever. This is a frozen copy of the documented algorithm: draw i
of a stream seeded with s is ``mix64(s + (i+1) * GOLDEN)``, normals come
from Box-Muller pairs over one uniform block.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):  # wraparound is the algorithm, not an error
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def derive(seed: int, *labels) -> int:
    """Fold int/str labels into a seed, giving an independent substream."""
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
    def __init__(self, seed: int):
        self._seed = np.uint64(seed & _MASK)
        self._counter = 0

    def _raw(self, n: int) -> np.ndarray:
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        with np.errstate(over="ignore"):
            return _mix(self._seed + idx * _GOLDEN)

    def normal(self, shape) -> np.ndarray:
        n = int(np.prod(shape))
        m = (n + 1) // 2
        raw = self._raw(2 * m)
        # u1 in (0, 1] so the log is finite; u2 in [0, 1)
        u1 = ((raw[:m] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
        u2 = (raw[m:] >> np.uint64(11)).astype(np.float64) * 2.0**-53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        return np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n].reshape(shape)
