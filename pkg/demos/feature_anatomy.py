#!/usr/bin/env python3
"""What one activation-map feature vector looks like, layer by layer.

Generates a tiny synthetic dataset, picks one reference with a mild and a
severe version of the same distortion, and prints the per-layer blocks of
the HaarPSI feature vector. The severe distortion pushes every block down,
and the deeper blocks (coarser maps) separate the two levels most.
"""

import tempfile
from pathlib import Path

import numpy as np

from mapqa.archive import load_archive
from mapqa.dataset import decode_image, load_manifest
from mapqa.features import extract_pair
from mapqa.synthetic import generate_dataset

REPO = Path(__file__).resolve().parent.parent


def block_means(net, vec):
    out = []
    at = 0
    for depth in net.conv_depths:
        out.append(float(np.mean(vec[at:at + depth])))
        at += depth
    return out


def main():
    net = load_archive(REPO / "archives" / "toy")
    with tempfile.TemporaryDirectory() as tmp:
        generate_dataset(Path(tmp), n_references=5, seed=7)
        manifest = load_manifest(Path(tmp) / "manifest.csv")
        rows = {
            r.pair_id: r
            for r in manifest.rows
            if r.reference_id == "ref000" and r.distortion_type == "gaussian_blur"
        }
        mild = rows["ref000/gaussian_blur_l1"]
        severe = rows["ref000/gaussian_blur_l5"]
        ref = decode_image(mild.reference_path)

        print(f"feature length {net.feature_length}, "
              f"conv depths {tuple(net.conv_depths)}")
        print(f"{'pair':28s} {'mos':>5s}  per-layer mean similarity")
        for row in (mild, severe):
            vec = extract_pair(net, ref, decode_image(row.distorted_path), "haarpsi")
            blocks = "  ".join(f"{b:.4f}" for b in block_means(net, vec.values))
            print(f"{row.pair_id:28s} {row.mos:5.2f}  {blocks}")


if __name__ == "__main__":
    main()
