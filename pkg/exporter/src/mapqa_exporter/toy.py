"""Seeded toy network: 3 conv/relu/maxpool stages, feature length 40.

Small enough to commit, big enough to exercise every executor code path
on inputs of 64x64 and up. Weights are He-initialized from the seeded
stream, biases zero, so a given seed regenerates the archive
byte-for-byte.
"""

from pathlib import Path

import numpy as np

from .rng import Rng, derive
from .writer import write_blob, write_descriptor

# (out, in, kh, kw, stride, pad, pool_window, pool_stride)
LAYOUT = [
    (8, 3, 5, 5, 2, 2, 3, 2),
    (16, 8, 3, 3, 1, 1, 3, 2),
    (16, 16, 3, 3, 1, 1, 2, 2),
]


def export_toy(seed: int = 7, out_dir="archives/toy") -> int:
    """Write the toy archive; returns the feature length (sum of conv depths)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    layers = []
    for i, (oc, ic, kh, kw, stride, pad, win, pstride) in enumerate(LAYOUT):
        fan_in = ic * kh * kw
        weights = (
            Rng(derive(seed, "toy", "conv", i)).normal((oc, ic, kh, kw))
            * np.sqrt(2.0 / fan_in)
        ).astype(np.float32)
        wname = f"conv{i + 1}_weight.bin"
        bname = f"conv{i + 1}_bias.bin"
        write_blob(out / wname, weights, (oc, ic, kh, kw))
        write_blob(out / bname, np.zeros(oc, dtype=np.float32), (oc,))
        layers.append(
            {
                "kind": "conv",
                "in": ic,
                "out": oc,
                "kh": kh,
                "kw": kw,
                "stride": stride,
                "pad": pad,
                "weights_file": wname,
                "bias_file": bname,
            }
        )
        layers.append({"kind": "relu"})
        layers.append({"kind": "maxpool", "window": win, "stride": pstride})

    feature_length = sum(spec[0] for spec in LAYOUT)
    write_descriptor(
        out,
        {
            "name": "toy",
            "input_normalization": {
                "means": [0.5, 0.5, 0.5],
                "stds": [0.25, 0.25, 0.25],
            },
            "layers": layers,
            "metadata": {
                "generator": "toy",
                "seed": seed,
                "feature_length": feature_length,
            },
        },
    )
    return feature_length
