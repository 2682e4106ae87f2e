"""Per-pair feature vectors from activation-map similarity.

Reference and distorted images run through the same network; the i-th
activation map of each conv layer's tap is compared with the chosen metric,
giving one similarity vector per layer; concatenating the layer vectors
yields the pair's feature vector.  Its length is the sum of the network's
conv output depths, independent of input resolution.

Activation maps carry no fixed intensity scale, so the metric's dynamic
range is chosen per channel pair as max(max(ref), max(dist)), floored at
1e-6 to keep stabilizers finite on dead channels.

The feature cache file is a CSV with header
``pair_id,mos,distortion_type,distortion_level,f_0,...,f_{N-1}``; floats are
printed with 9 significant digits.  Extraction is resumable: rows already
present in the output file are kept, only missing pair_ids are computed, and
the file is rewritten in manifest order, so a completed run's bytes never
depend on how it was interrupted or how many threads ran.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .archive import NetworkDescriptor, run_network
from .errors import CorruptFile, MissingColumn, ResolutionMismatch, ShapeMismatch
from .metrics import METRICS

RANGE_FLOOR = 1e-6


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray  # float64, length = sum of conv depths
    layer_offsets: tuple  # index of each layer's first element, starts at 0
    metric: str


def adaptive_range(a: np.ndarray, b: np.ndarray) -> float:
    return max(float(np.max(a)), float(np.max(b)), RANGE_FLOOR)


def layer_features(ref_act: np.ndarray, dist_act: np.ndarray, metric: str) -> np.ndarray:
    if metric not in METRICS:
        raise ShapeMismatch(f"unknown metric '{metric}'")
    if ref_act.shape != dist_act.shape:
        raise ShapeMismatch(
            f"activation shapes differ: {ref_act.shape} vs {dist_act.shape}"
        )
    fn = METRICS[metric]
    out = np.empty(ref_act.shape[0], dtype=np.float64)
    for i in range(ref_act.shape[0]):
        a = ref_act[i]
        b = dist_act[i]
        out[i] = fn(a, b, adaptive_range(a, b))
    return out


def extract_pair(
    net: NetworkDescriptor,
    ref_img: np.ndarray,
    dist_img: np.ndarray,
    metric: str,
    ref_taps: list = None,
) -> FeatureVector:
    """Feature vector for one image pair.

    ref_taps, when given, must be run_network(net, ref_img); callers that
    reuse one reference against many distortions pass it to skip the
    reference's forward pass.
    """
    if ref_img.shape != dist_img.shape:
        raise ResolutionMismatch(
            f"reference {ref_img.shape} vs distorted {dist_img.shape}; "
            "activation maps are never resized"
        )
    if ref_taps is None:
        ref_taps = run_network(net, ref_img)
    dist_taps = run_network(net, dist_img)
    parts = []
    offsets = []
    at = 0
    for ref_act, dist_act in zip(ref_taps, dist_taps):
        offsets.append(at)
        part = layer_features(ref_act, dist_act, metric)
        parts.append(part)
        at += part.size
    return FeatureVector(
        values=np.concatenate(parts), layer_offsets=tuple(offsets), metric=metric
    )


# --- feature cache file ------------------------------------------------

def _format_float(x: float) -> str:
    return "%.9g" % x


@dataclass(frozen=True)
class FeatureTable:
    pair_ids: list
    mos: np.ndarray
    distortion_types: list
    distortion_levels: list  # ints, or None where the manifest had none
    X: np.ndarray  # (n_pairs, n_features) float64

    def reference_ids(self) -> list:
        """Reference id of each pair, from the `<reference_id>/<rest>` pair_id
        convention; pair_ids without a slash fall back to themselves."""
        return [pid.split("/", 1)[0] for pid in self.pair_ids]


def write_features(path, table: FeatureTable) -> None:
    n_features = table.X.shape[1]
    header = ["pair_id", "mos", "distortion_type", "distortion_level"]
    header += [f"f_{i}" for i in range(n_features)]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i, pid in enumerate(table.pair_ids):
            level = table.distortion_levels[i]
            writer.writerow(
                [
                    pid,
                    _format_float(float(table.mos[i])),
                    table.distortion_types[i],
                    "" if level is None else str(level),
                ]
                + [_format_float(v) for v in table.X[i]]
            )


def read_features(path) -> FeatureTable:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingColumn(f"{path}: empty feature file") from None
        required = ["pair_id", "mos", "distortion_type", "distortion_level"]
        if header[: len(required)] != required:
            raise MissingColumn(
                f"{path}: header must start with {','.join(required)}"
            )
        n_features = len(header) - len(required)
        expected_f = [f"f_{i}" for i in range(n_features)]
        if header[len(required) :] != expected_f:
            raise MissingColumn(f"{path}: feature columns must be f_0..f_{n_features-1}")
        pair_ids, mos, types, levels, rows = [], [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            try:
                pair_ids.append(row[0])
                mos.append(float(row[1]))
                types.append(row[2])
                levels.append(int(row[3]) if row[3] != "" else None)
                rows.append([float(v) for v in row[4:]])
            except (ValueError, IndexError) as exc:
                raise CorruptFile(f"{path}:{lineno}: bad feature row: {exc}") from exc
            if len(rows[-1]) != n_features:
                raise CorruptFile(
                    f"{path}:{lineno}: {len(rows[-1])} feature values, "
                    f"expected {n_features}"
                )
    return FeatureTable(
        pair_ids=pair_ids,
        mos=np.asarray(mos, dtype=np.float64),
        distortion_types=types,
        distortion_levels=levels,
        X=np.asarray(rows, dtype=np.float64).reshape(len(pair_ids), n_features),
    )


def extract_manifest(net, manifest, metric: str, out_path, threads: int = 1, log=None):
    """Extract features for every manifest pair into out_path (CSV).

    Existing rows in out_path are reused; only missing pairs are computed.
    Rows are written in manifest order regardless of completion order or
    thread count.  Returns the number of freshly computed pairs.
    """
    from .dataset import decode_image  # deferred to keep import graph acyclic

    out_path = Path(out_path)
    existing = {}
    if out_path.is_file():
        cached = read_features(out_path)
        if cached.X.shape[1] == net.feature_length:
            for i, pid in enumerate(cached.pair_ids):
                existing[pid] = (
                    cached.mos[i],
                    cached.distortion_types[i],
                    cached.distortion_levels[i],
                    cached.X[i],
                )

    todo = [row for row in manifest.rows if row.pair_id not in existing]

    # Forward passes of shared references are computed once, up front.
    ref_paths = {}
    for row in todo:
        ref_paths.setdefault(row.reference_id, row.reference_path)

    def ref_taps_for(item):
        ref_id, path = item
        img = decode_image(path)
        return ref_id, img.shape, run_network(net, img)

    def features_for(row):
        dist_img = decode_image(row.distorted_path)
        if dist_img.shape != ref_shapes[row.reference_id]:
            raise ResolutionMismatch(
                f"pair {row.pair_id}: reference {ref_shapes[row.reference_id]} vs "
                f"distorted {dist_img.shape}"
            )
        dist_taps = run_network(net, dist_img)
        parts = [
            layer_features(r, d, metric)
            for r, d in zip(ref_taps[row.reference_id], dist_taps)
        ]
        return np.concatenate(parts)

    workers = max(1, int(threads))
    ref_taps = {}
    ref_shapes = {}
    computed = []
    if todo:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for ref_id, shape, taps in pool.map(ref_taps_for, sorted(ref_paths.items())):
                ref_taps[ref_id] = taps
                ref_shapes[ref_id] = shape
            computed = list(pool.map(features_for, todo))
    for row, values in zip(todo, computed):
        existing[row.pair_id] = (
            row.mos,
            row.distortion_type or "",
            row.distortion_level,
            values,
        )

    ordered = manifest.rows
    table = FeatureTable(
        pair_ids=[r.pair_id for r in ordered],
        mos=np.asarray([existing[r.pair_id][0] for r in ordered], dtype=np.float64),
        distortion_types=[existing[r.pair_id][1] for r in ordered],
        distortion_levels=[existing[r.pair_id][2] for r in ordered],
        X=np.vstack([existing[r.pair_id][3] for r in ordered])
        if ordered
        else np.zeros((0, net.feature_length)),
    )
    write_features(out_path, table)
    if log is not None:
        log(f"computed {len(todo)} of {len(ordered)} pairs ({len(ordered) - len(todo)} cached)")
    return len(todo)
