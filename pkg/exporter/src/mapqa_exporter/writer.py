"""On-disk archive writing shared by both export paths."""

import json
from pathlib import Path

import numpy as np


def write_blob(path: Path, array: np.ndarray, shape: tuple) -> None:
    """Write one float32 little-endian blob, validating its shape first."""
    a = np.ascontiguousarray(np.asarray(array, dtype="<f4"))
    if a.shape != shape:
        raise ValueError(f"{path.name}: shape {a.shape}, expected {shape}")
    path.write_bytes(a.tobytes())


def write_descriptor(out_dir: Path, descriptor: dict) -> None:
    text = json.dumps(descriptor, indent=2) + "\n"
    (out_dir / "network.json").write_text(text, encoding="utf-8")
