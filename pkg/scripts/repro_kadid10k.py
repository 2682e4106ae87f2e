#!/usr/bin/env python3
"""Reproduce the KADID-10k cross-validation benchmark.

KADID-10k is a public image-quality database: 81 pristine references, each
distorted by 25 distortion types at 5 levels, 10125 rated pairs in total.
The evaluation protocol is reference-disjoint 5-fold cross validation
repeated 100 times.

The database itself is not shipped with this repository.  Run without
arguments (or with --check-protocol) to verify the protocol shape alone:
pair count, reference count, fold sizes, repetition count.  That mode
needs no data and exits 0 when the protocol constants hold.

To run the real benchmark, download and unpack the database (see
docs/datasets.md), export a pretrained archive with the exporter package,
then:

    python3 scripts/repro_kadid10k.py \
        --kadid-dir /path/to/kadid10k \
        --net archives/pretrained \
        --out kadid_report.csv

The script converts dmos.csv to a manifest, extracts HaarPSI activation-map
features, cross-validates the Gaussian SVR, and prints the measured
correlations next to the reference values for this feature/regressor
configuration on KADID-10k (PLCC 0.959, SROCC 0.957, KROCC 0.819).
"""

import argparse
import csv
import sys
from pathlib import Path

from mapqa import evaluation, features
from mapqa.archive import load_archive
from mapqa.cli import run_crossval, write_report_csv
from mapqa.dataset import DatasetManifest, ManifestRow, write_manifest
from mapqa.errors import DataError
from mapqa.features import read_features

N_REFERENCES = 81
N_TYPES = 25
N_LEVELS = 5
N_PAIRS = N_REFERENCES * N_TYPES * N_LEVELS
FOLDS = 5
REPETITIONS = 100
# reference correlations for HaarPSI activation-map features + Gaussian SVR
EXPECTED = {"plcc": 0.959, "srocc": 0.957, "krocc": 0.819}


def check_protocol() -> int:
    assert N_PAIRS == 10125, N_PAIRS
    ids = [f"I{i + 1:02d}" for i in range(N_REFERENCES)]
    plans = evaluation.make_splits(ids, folds=FOLDS, repetitions=REPETITIONS, seed=0)
    assert len(plans) == REPETITIONS, len(plans)
    for plan in plans:
        sizes = sorted(len(f) for f in plan.folds)
        assert sizes == [16, 16, 16, 16, 17], sizes
        flat = [r for fold in plan.folds for r in fold]
        assert sorted(flat) == ids
    print(
        f"protocol ok: {N_PAIRS} pairs, {N_REFERENCES} references, "
        f"{FOLDS} folds of sizes 17/16/16/16/16, {REPETITIONS} repetitions"
    )
    return 0


def convert_manifest(kadid_dir: Path, out_path: Path) -> None:
    """Convert the database's dmos.csv into our manifest format.

    dmos.csv rows are `dist_img,ref_img,dmos,var`; distorted file names
    follow `I<ref>_<type>_<level>.png`.
    """
    dmos_path = kadid_dir / "dmos.csv"
    images = kadid_dir / "images"
    if not dmos_path.is_file():
        raise DataError(f"{dmos_path}: not found; is --kadid-dir correct?")
    rows = []
    with open(dmos_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            dist = rec["dist_img"]
            ref = rec["ref_img"]
            stem = Path(dist).stem  # I03_08_04
            _, dtype, dlevel = stem.split("_")
            rows.append(
                ManifestRow(
                    pair_id=f"{Path(ref).stem}/{stem}",
                    reference_id=Path(ref).stem,
                    reference_path=images / ref,
                    distorted_path=images / dist,
                    mos=float(rec["dmos"]),
                    distortion_type=dtype,
                    distortion_level=int(dlevel),
                )
            )
    if len(rows) != N_PAIRS:
        raise DataError(f"expected {N_PAIRS} rated pairs, found {len(rows)}")
    manifest = DatasetManifest(rows=tuple(rows), root=out_path.parent)
    write_manifest(manifest, out_path)
    refs = len(manifest.reference_ids())
    if refs != N_REFERENCES:
        raise DataError(f"expected {N_REFERENCES} references, found {refs}")
    print(f"wrote manifest: {len(rows)} pairs, {refs} references")


def run_benchmark(args) -> int:
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    manifest_path = out.parent / "kadid10k_manifest.csv"
    convert_manifest(Path(args.kadid_dir), manifest_path)

    net = load_archive(args.net)
    from mapqa.dataset import load_manifest

    manifest = load_manifest(manifest_path)
    cache = out.parent / "kadid10k_features_haarpsi.csv"
    features.extract_manifest(
        net, manifest, "haarpsi", cache, threads=args.threads,
        log=lambda m: print(m, file=sys.stderr),
    )
    table = read_features(cache)
    rows = run_crossval(
        table, "gsvr", folds=FOLDS, reps=REPETITIONS, seed=0,
        threads=args.threads,
    )
    write_report_csv(out, rows)
    overall = next(r for r in rows if r.scope == "all")
    print(f"{'':10s}{'plcc':>10s}{'srocc':>10s}{'krocc':>10s}")
    print(
        f"{'measured':10s}{overall.plcc:10.3f}{overall.srocc:10.3f}"
        f"{overall.krocc:10.3f}"
    )
    print(
        f"{'reference':10s}{EXPECTED['plcc']:10.3f}{EXPECTED['srocc']:10.3f}"
        f"{EXPECTED['krocc']:10.3f}"
    )
    print(
        f"{'delta':10s}{overall.plcc - EXPECTED['plcc']:+10.3f}"
        f"{overall.srocc - EXPECTED['srocc']:+10.3f}"
        f"{overall.krocc - EXPECTED['krocc']:+10.3f}"
    )
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--check-protocol", action="store_true",
        help="verify protocol constants only; needs no data",
    )
    parser.add_argument("--kadid-dir", help="unpacked database directory")
    parser.add_argument("--net", help="pretrained weight-archive directory")
    parser.add_argument("--out", default="kadid_report.csv")
    parser.add_argument("--threads", type=int, default=0)
    args = parser.parse_args(argv)

    if args.check_protocol or not (args.kadid_dir and args.net):
        if args.kadid_dir or args.net:
            if not (args.kadid_dir and args.net):
                print(
                    "need both --kadid-dir and --net for the full benchmark; "
                    "running the protocol check instead",
                    file=sys.stderr,
                )
        return check_protocol()
    return run_benchmark(args)


if __name__ == "__main__":
    sys.exit(main())
