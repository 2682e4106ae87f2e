"""Self-contained synthetic benchmark: procedural images, graded distortions.

Generates reference images at 128x96 (mixed gradients, checkerboards, and
filtered noise; every reference carries some high-frequency texture so blur
and compression artifacts are detectable), distorts each with every
(kind, level) combination, and writes PNGs plus a standard manifest.

The pseudo-MOS is a deterministic function of (kind, level): 1 minus a
kind-specific slope times the level.  Slopes are chosen so all 20
(kind, level) values are distinct.  Rank-correlation evaluation only needs
monotone ground truth, which this provides by construction.

Everything is a pure function of the seed; rerunning with the same seed
rewrites byte-identical PNGs and manifest.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.fft
import scipy.ndimage
from PIL import Image

from .dataset import DatasetManifest, ManifestRow, load_manifest, write_manifest
from .errors import IoError, TooFewReferences
from .rng import Rng, derive

WIDTH = 128
HEIGHT = 96

KINDS = ("gaussian_blur", "white_noise", "jpeg_like_block_quantization", "mean_shift")
LEVELS = (1, 2, 3, 4, 5)

_MOS_SLOPE = {
    "gaussian_blur": 0.16,
    "white_noise": 0.17,
    "jpeg_like_block_quantization": 0.15,
    "mean_shift": 0.11,
}

_BLUR_SIGMA = {1: 0.6, 2: 1.1, 3: 1.8, 4: 2.7, 5: 3.8}
_NOISE_SIGMA = {1: 0.02, 2: 0.04, 3: 0.07, 4: 0.12, 5: 0.2}
_QUANT_STEP = {1: 0.02, 2: 0.045, 3: 0.09, 4: 0.16, 5: 0.28}
_MEAN_DELTA = {1: 0.03, 2: 0.06, 3: 0.1, 4: 0.15, 5: 0.21}


def pseudo_mos(kind: str, level: int) -> float:
    return 1.0 - _MOS_SLOPE[kind] * level


# --- reference synthesis -------------------------------------------------

def _filtered_noise(rng: Rng, sigma: float = 2.5) -> np.ndarray:
    field = scipy.ndimage.gaussian_filter(rng.normal((HEIGHT, WIDTH)), sigma)
    lo, hi = field.min(), field.max()
    return (field - lo) / (hi - lo)


def _gradient(rng: Rng) -> np.ndarray:
    theta = rng.uniform() * 2.0 * np.pi
    yy, xx = np.mgrid[0:HEIGHT, 0:WIDTH]
    ramp = np.cos(theta) * xx / WIDTH + np.sin(theta) * yy / HEIGHT
    lo, hi = ramp.min(), ramp.max()
    return (ramp - lo) / (hi - lo)


def _checkerboard(rng: Rng) -> np.ndarray:
    cell = 6 + 2 * rng.below(4)
    oy = rng.below(cell)
    ox = rng.below(cell)
    dark = 0.2 + 0.25 * rng.uniform()
    light = 0.6 + 0.25 * rng.uniform()
    yy, xx = np.mgrid[0:HEIGHT, 0:WIDTH]
    board = (((yy + oy) // cell + (xx + ox) // cell) % 2).astype(np.float64)
    return dark + (light - dark) * board


def _reference_array(seed: int, index: int) -> np.ndarray:
    """One reference as (H, W, 3) float64 in [0, 1]."""
    rng = Rng(derive(seed, "reference", index))
    style = index % 4
    if style == 0:
        base = _gradient(rng)
    elif style == 1:
        base = _checkerboard(rng)
    elif style == 2:
        base = _filtered_noise(rng)
    else:
        base = 0.5 * _gradient(rng) + 0.5 * _checkerboard(rng)
    # texture guarantees high-frequency content on smooth styles
    texture = _filtered_noise(rng, sigma=1.2)
    base = 0.70 * base + 0.30 * texture
    img = np.empty((HEIGHT, WIDTH, 3))
    for c in range(3):
        gain = 0.85 + 0.15 * rng.uniform()
        offset = 0.08 * rng.uniform()
        img[:, :, c] = np.clip(gain * base + offset, 0.0, 1.0)
    return img


# --- distortions ---------------------------------------------------------

def _distort(img: np.ndarray, kind: str, level: int, rng: Rng) -> np.ndarray:
    if kind == "gaussian_blur":
        out = np.empty_like(img)
        for c in range(3):
            out[:, :, c] = scipy.ndimage.gaussian_filter(
                img[:, :, c], _BLUR_SIGMA[level], mode="reflect"
            )
        return out
    if kind == "white_noise":
        return img + _NOISE_SIGMA[level] * rng.normal(img.shape)
    if kind == "jpeg_like_block_quantization":
        return _block_quantize(img, _QUANT_STEP[level])
    if kind == "mean_shift":
        return img + _MEAN_DELTA[level]
    raise ValueError(f"unknown distortion kind '{kind}'")


def _block_quantize(img: np.ndarray, base_step: float) -> np.ndarray:
    """8x8 block DCT with frequency-ramped quantization steps."""
    fy, fx = np.mgrid[0:8, 0:8]
    step = base_step * (1.0 + fy + fx)
    pad_h = (-img.shape[0]) % 8
    pad_w = (-img.shape[1]) % 8
    out = np.empty_like(img)
    for c in range(3):
        plane = np.pad(img[:, :, c], ((0, pad_h), (0, pad_w)), mode="reflect")
        h8, w8 = plane.shape[0] // 8, plane.shape[1] // 8
        blocks = plane.reshape(h8, 8, w8, 8)
        coeffs = scipy.fft.dctn(blocks, axes=(1, 3), norm="ortho")
        coeffs = np.round(coeffs / step[None, :, None, :]) * step[None, :, None, :]
        plane = scipy.fft.idctn(coeffs, axes=(1, 3), norm="ortho").reshape(
            h8 * 8, w8 * 8
        )
        out[:, :, c] = plane[: img.shape[0], : img.shape[1]]
    return out


# --- emission ------------------------------------------------------------

def _save_png(arr01: np.ndarray, path: Path) -> None:
    data = np.clip(np.round(arr01 * 255.0), 0, 255).astype(np.uint8)
    try:
        Image.fromarray(data, mode="RGB").save(path, format="PNG")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def generate_dataset(out_dir, n_references: int, seed: int) -> DatasetManifest:
    """Write references, distorted images, and manifest under out_dir.

    Returns the manifest re-loaded from disk (so the round trip is part of
    every generation).
    """
    if n_references < 5:
        raise TooFewReferences(
            f"need at least 5 references for 5-fold protocols, got {n_references}"
        )
    out = Path(out_dir)
    try:
        (out / "refs").mkdir(parents=True, exist_ok=True)
        (out / "dist").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {out}: {exc}") from exc

    rows = []
    for index in range(n_references):
        ref_id = f"ref{index:03d}"
        ref_arr = _reference_array(seed, index)
        ref_rel = f"refs/{ref_id}.png"
        _save_png(ref_arr, out / ref_rel)
        for kind in KINDS:
            for level in LEVELS:
                rng = Rng(derive(seed, "distort", index, kind, level))
                dist_arr = np.clip(_distort(ref_arr, kind, level, rng), 0.0, 1.0)
                dist_rel = f"dist/{ref_id}_{kind}_l{level}.png"
                _save_png(dist_arr, out / dist_rel)
                rows.append(
                    ManifestRow(
                        pair_id=f"{ref_id}/{kind}_l{level}",
                        reference_id=ref_id,
                        reference_path=out / ref_rel,
                        distorted_path=out / dist_rel,
                        mos=pseudo_mos(kind, level),
                        distortion_type=kind,
                        distortion_level=level,
                    )
                )
    manifest = DatasetManifest(rows=tuple(rows), root=out)
    write_manifest(manifest, out / "manifest.csv")
    return load_manifest(out / "manifest.csv")
