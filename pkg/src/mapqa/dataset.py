"""Dataset ingestion: manifest CSV, image decoding, MOS normalization.

The manifest CSV header is exactly
``pair_id,reference_id,reference_path,distorted_path,mos,distortion_type,distortion_level``
with image paths relative to the manifest's directory.  Converting a public
IQA database's native score files into this shape is documented per database
in docs/datasets.md; nothing is scraped automatically.

pair_id convention: downstream feature files drop the reference_id column,
so generators prefix it into the pair id as ``<reference_id>/<rest>``.
Cross-validation recovers reference grouping from that prefix alone.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    CorruptFile,
    DegenerateInput,
    DuplicatePairId,
    MissingColumn,
    MissingImageFile,
    UnsupportedFormat,
    ValidationError,
)

MANIFEST_COLUMNS = [
    "pair_id",
    "reference_id",
    "reference_path",
    "distorted_path",
    "mos",
    "distortion_type",
    "distortion_level",
]


@dataclass(frozen=True)
class ManifestRow:
    pair_id: str
    reference_id: str
    reference_path: Path  # resolved against the manifest directory
    distorted_path: Path
    mos: float
    distortion_type: str  # "" when absent
    distortion_level: int = None  # None when absent


@dataclass(frozen=True)
class DatasetManifest:
    rows: tuple
    root: Path

    def reference_ids(self):
        seen = []
        known = set()
        for row in self.rows:
            if row.reference_id not in known:
                known.add(row.reference_id)
                seen.append(row.reference_id)
        return seen


def load_manifest(path, check_images: bool = True) -> DatasetManifest:
    path = Path(path)
    root = path.parent
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingColumn(f"{path}: empty manifest") from None
        if header != MANIFEST_COLUMNS:
            missing = [c for c in MANIFEST_COLUMNS if c not in header]
            raise MissingColumn(
                f"{path}: header must be {','.join(MANIFEST_COLUMNS)}"
                + (f" (missing: {', '.join(missing)})" if missing else "")
            )
        rows = []
        seen = set()
        ref_paths = {}
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(MANIFEST_COLUMNS):
                raise MissingColumn(
                    f"{path}:{lineno}: expected {len(MANIFEST_COLUMNS)} columns, "
                    f"got {len(rec)}"
                )
            pair_id, ref_id, ref_rel, dist_rel, mos_s, dtype, dlevel = rec
            if pair_id in seen:
                raise DuplicatePairId(f"{path}:{lineno}: duplicate pair_id '{pair_id}'")
            seen.add(pair_id)
            if not ref_id:
                raise MissingColumn(f"{path}:{lineno}: empty reference_id")
            try:
                mos = float(mos_s)
                level = int(dlevel) if dlevel != "" else None
            except ValueError as exc:
                raise CorruptFile(f"{path}:{lineno}: {exc}") from exc
            if not np.isfinite(mos):
                raise ValidationError(f"{path}:{lineno}: non-finite mos")
            if ref_id in ref_paths and ref_paths[ref_id] != ref_rel:
                raise ValidationError(
                    f"{path}:{lineno}: reference_id '{ref_id}' maps to two paths"
                )
            ref_paths[ref_id] = ref_rel
            rows.append(
                ManifestRow(
                    pair_id=pair_id,
                    reference_id=ref_id,
                    reference_path=root / ref_rel,
                    distorted_path=root / dist_rel,
                    mos=mos,
                    distortion_type=dtype,
                    distortion_level=level,
                )
            )
    if check_images:
        for row in rows:
            for p in (row.reference_path, row.distorted_path):
                if not p.is_file():
                    raise MissingImageFile(
                        f"pair '{row.pair_id}': image not found: {p}"
                    )
    return DatasetManifest(rows=tuple(rows), root=root)


def write_manifest(manifest: DatasetManifest, path) -> None:
    path = Path(path)
    root = path.parent
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_COLUMNS)
        for row in manifest.rows:
            writer.writerow(
                [
                    row.pair_id,
                    row.reference_id,
                    row.reference_path.relative_to(root).as_posix(),
                    row.distorted_path.relative_to(root).as_posix(),
                    "%.9g" % row.mos,
                    row.distortion_type,
                    "" if row.distortion_level is None else str(row.distortion_level),
                ]
            )


def decode_image(path) -> np.ndarray:
    """Decode an 8-bit RGB or grayscale PNG/BMP to (3, H, W) float32 in [0, 1].

    Grayscale is promoted to three identical channels.  Anything else
    (palette, alpha, 16-bit) is rejected explicitly rather than silently
    converted, because silent conversions are decoder-dependent.
    """
    path = Path(path)
    try:
        with Image.open(path) as img:
            if img.format not in ("PNG", "BMP"):
                raise UnsupportedFormat(
                    f"{path}: format {img.format}, only PNG and BMP are supported"
                )
            if img.mode not in ("RGB", "L"):
                raise UnsupportedFormat(
                    f"{path}: mode {img.mode}, only 8-bit RGB or grayscale "
                    "is supported"
                )
            data = np.asarray(img, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise CorruptFile(f"{path}: cannot decode image: {exc}") from exc
    except OSError as exc:
        raise CorruptFile(f"{path}: {exc}") from exc
    if data.ndim == 2:
        data = np.stack([data, data, data], axis=0)
    else:
        data = np.transpose(data, (2, 0, 1))
    return (data.astype(np.float32)) / np.float32(255.0)


def normalize_mos(manifest: DatasetManifest, mode: str = "none") -> DatasetManifest:
    """Optionally min-max map MOS to [0, 1] (used for cross-database training)."""
    if mode == "none":
        return manifest
    if mode != "minmax_per_db":
        raise ValidationError(f"unknown normalization mode '{mode}'")
    values = np.array([row.mos for row in manifest.rows], dtype=np.float64)
    lo = float(values.min())
    hi = float(values.max())
    if hi == lo:
        raise DegenerateInput("cannot min-max normalize a constant mos column")
    rows = tuple(
        replace(row, mos=(row.mos - lo) / (hi - lo)) for row in manifest.rows
    )
    return DatasetManifest(rows=rows, root=manifest.root)
