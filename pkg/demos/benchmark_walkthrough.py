#!/usr/bin/env python3
"""The whole pipeline in one sitting, at toy scale.

Synthetic dataset -> HaarPSI activation-map features -> Gaussian SVR under
reference-disjoint 5-fold cross validation (3 repetitions to stay quick),
then the scoped correlation table. With 100 repetitions this is exactly
the benchmark the acceptance suite runs.
"""

import tempfile
from pathlib import Path

from mapqa.archive import load_archive
from mapqa.cli import run_crossval
from mapqa.dataset import load_manifest
from mapqa.features import extract_manifest, read_features
from mapqa.synthetic import generate_dataset

REPO = Path(__file__).resolve().parent.parent


def main():
    net = load_archive(REPO / "archives" / "toy")
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        generate_dataset(root / "data", n_references=10, seed=7)
        print("generated 10 references x 20 distorted versions")

        manifest = load_manifest(root / "data" / "manifest.csv")
        extract_manifest(net, manifest, "haarpsi", root / "features.csv", threads=0)
        table = read_features(root / "features.csv")
        print(f"extracted {table.X.shape[0]} x {table.X.shape[1]} features")

        rows = run_crossval(table, "gsvr", folds=5, reps=3, seed=0, threads=0)
        print()
        print(f"{'scope':12s} {'n':>4s} {'plcc':>7s} {'srocc':>7s} {'krocc':>7s}")
        for r in rows:
            print(
                f"{r.scope:12s} {r.n:4d} {r.plcc:7.3f} {r.srocc:7.3f} "
                f"{r.krocc:7.3f}"
            )


if __name__ == "__main__":
    main()
