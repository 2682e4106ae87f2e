"""Weight archives: a directory holding `network.json` plus raw float32 blobs.

The descriptor lists layers in execution order.  Conv layers name their
weight and bias blob files; blobs are little-endian float32 with no header,
weights in (out-channel, in-channel/groups, kernel-row, kernel-column)
order.  `input_normalization` records the per-channel means and stds the
weights were trained with; run_network applies them to [0,1] RGB input.

Activations are tapped at the output of the ReLU that follows each conv
layer, so a network with L conv layers yields L tapped tensors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import nn
from .errors import (
    ChannelChainBroken,
    DegenerateOutput,
    MalformedDescriptor,
    MissingFile,
    ShapeMismatch,
)

INPUT_DEPTH = 3


@dataclass(frozen=True)
class LayerRecord:
    kind: str  # conv | relu | maxpool | lrn
    spec: object  # nn.ConvSpec / nn.PoolSpec / nn.LrnSpec / None for relu


@dataclass(frozen=True)
class NetworkDescriptor:
    name: str
    means: np.ndarray  # per-channel, applied after x/255 scaling
    stds: np.ndarray
    layers: tuple
    conv_depths: tuple  # out_channels per conv layer, in order

    @property
    def conv_layer_count(self) -> int:
        return len(self.conv_depths)

    @property
    def feature_length(self) -> int:
        return int(sum(self.conv_depths))


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise MalformedDescriptor(f"{context}: missing field '{key}'")
    return mapping[key]


def _load_blob(path: Path, count: int) -> np.ndarray:
    if not path.is_file():
        raise MissingFile(f"blob file not found: {path}")
    raw = path.read_bytes()
    if len(raw) != 4 * count:
        raise ShapeMismatch(
            f"{path.name}: {len(raw)} bytes, expected {4 * count} "
            f"({count} float32 values)"
        )
    return np.frombuffer(raw, dtype="<f4").astype(np.float32)


def load_archive(path) -> NetworkDescriptor:
    root = Path(path)
    descriptor_path = root / "network.json"
    if not descriptor_path.is_file():
        raise MissingFile(f"descriptor not found: {descriptor_path}")
    try:
        doc = json.loads(descriptor_path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedDescriptor(f"{descriptor_path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedDescriptor("network.json must contain a JSON object")

    name = str(doc.get("name", root.name))
    norm = _require(doc, "input_normalization", "network.json")
    means = np.asarray(_require(norm, "means", "input_normalization"), dtype=np.float32)
    stds = np.asarray(_require(norm, "stds", "input_normalization"), dtype=np.float32)
    if means.shape != (INPUT_DEPTH,) or stds.shape != (INPUT_DEPTH,):
        raise MalformedDescriptor("input_normalization means/stds must have length 3")
    if np.any(stds <= 0):
        raise MalformedDescriptor("input_normalization stds must be positive")

    raw_layers = _require(doc, "layers", "network.json")
    if not isinstance(raw_layers, list) or not raw_layers:
        raise MalformedDescriptor("layers must be a non-empty list")

    layers = []
    conv_depths = []
    depth = INPUT_DEPTH
    previous_was_conv = False
    for idx, rec in enumerate(raw_layers):
        if not isinstance(rec, dict):
            raise MalformedDescriptor(f"layer {idx} is not an object")
        kind = _require(rec, "kind", f"layer {idx}")
        if previous_was_conv and kind != "relu":
            raise MalformedDescriptor(
                f"layer {idx}: conv layers must be followed by relu "
                "(activations are tapped post-relu)"
            )
        previous_was_conv = False
        if kind == "conv":
            in_ch = int(_require(rec, "in", f"layer {idx}"))
            out_ch = int(_require(rec, "out", f"layer {idx}"))
            kh = int(_require(rec, "kh", f"layer {idx}"))
            kw = int(_require(rec, "kw", f"layer {idx}"))
            groups = int(rec.get("groups", 1))
            if in_ch != depth:
                raise ChannelChainBroken(
                    f"layer {idx}: conv declares in={in_ch} but receives depth {depth}"
                )
            if groups < 1 or in_ch % groups or out_ch % groups:
                raise MalformedDescriptor(
                    f"layer {idx}: groups={groups} incompatible with {in_ch}->{out_ch}"
                )
            w_count = out_ch * (in_ch // groups) * kh * kw
            weights = _load_blob(
                root / str(_require(rec, "weights_file", f"layer {idx}")), w_count
            ).reshape(out_ch, in_ch // groups, kh, kw)
            bias = _load_blob(
                root / str(_require(rec, "bias_file", f"layer {idx}")), out_ch
            )
            spec = nn.ConvSpec(
                in_channels=in_ch,
                out_channels=out_ch,
                kernel_h=kh,
                kernel_w=kw,
                stride=int(_require(rec, "stride", f"layer {idx}")),
                padding=int(_require(rec, "pad", f"layer {idx}")),
                groups=groups,
                weights=weights,
                bias=bias,
            )
            layers.append(LayerRecord("conv", spec))
            conv_depths.append(out_ch)
            depth = out_ch
            previous_was_conv = True
        elif kind == "relu":
            layers.append(LayerRecord("relu", None))
        elif kind == "maxpool":
            layers.append(
                LayerRecord(
                    "maxpool",
                    nn.PoolSpec(
                        window=int(_require(rec, "window", f"layer {idx}")),
                        stride=int(_require(rec, "stride", f"layer {idx}")),
                    ),
                )
            )
        elif kind == "lrn":
            layers.append(
                LayerRecord(
                    "lrn",
                    nn.LrnSpec(
                        n=int(_require(rec, "n", f"layer {idx}")),
                        alpha=float(_require(rec, "alpha", f"layer {idx}")),
                        beta=float(_require(rec, "beta", f"layer {idx}")),
                        k=float(_require(rec, "k", f"layer {idx}")),
                    ),
                )
            )
        else:
            raise MalformedDescriptor(f"layer {idx}: unknown kind '{kind}'")
    if previous_was_conv:
        raise MalformedDescriptor("final conv layer lacks a following relu")
    if not conv_depths:
        raise MalformedDescriptor("network has no conv layers")

    return NetworkDescriptor(
        name=name,
        means=means,
        stds=stds,
        layers=tuple(layers),
        conv_depths=tuple(conv_depths),
    )


def run_network(net: NetworkDescriptor, image: np.ndarray) -> list:
    """Forward pass over a (3, H, W) float32 image with values in [0, 1].

    Returns the L post-ReLU activation tensors in network order.
    """
    x = nn.as_tensor(image)
    if x.shape[0] != INPUT_DEPTH:
        raise ShapeMismatch(f"expected 3 input channels, got {x.shape[0]}")
    x = (x - net.means[:, None, None]) / net.stds[:, None, None]

    taps = []
    pending_conv = False
    for layer in net.layers:
        if layer.kind == "conv":
            x = nn.conv2d(x, layer.spec)
            pending_conv = True
        elif layer.kind == "relu":
            x = nn.relu(x)
            if pending_conv:
                taps.append(x)
                pending_conv = False
        elif layer.kind == "maxpool":
            x = nn.maxpool(x, layer.spec)
        else:
            x = nn.lrn(x, layer.spec)
    if len(taps) != net.conv_layer_count:
        # load_archive enforces conv->relu pairing, so this is unreachable
        raise DegenerateOutput("network produced fewer taps than conv layers")
    return taps
