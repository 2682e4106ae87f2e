"""Forward-only dense tensor operators: conv2d, relu, maxpool, lrn.

A tensor is a numpy float32 array of shape (depth, height, width),
channel-major.  All four operators are pure functions; given bit-identical
inputs they return bit-identical outputs.  conv2d deliberately avoids BLAS
matrix products: it accumulates in float32 over a fixed loop order
(in-channel, then kernel row, then kernel column), so results do not depend
on the numpy build or its threading configuration.

That determinism costs speed, which is acceptable: the networks run here are
small AlexNet-family stacks on sub-megapixel images.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateOutput, ShapeMismatch, ValidationError


@dataclass(frozen=True)
class ConvSpec:
    """2-D convolution parameters with weights in (out, in/groups, kh, kw) order."""

    in_channels: int
    out_channels: int
    kernel_h: int
    kernel_w: int
    stride: int = 1
    padding: int = 0
    groups: int = 1
    weights: np.ndarray = field(default=None, repr=False)
    bias: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.stride < 1 or self.padding < 0 or self.groups < 1:
            raise ValidationError("stride must be >= 1, padding >= 0, groups >= 1")
        if self.in_channels % self.groups or self.out_channels % self.groups:
            raise ShapeMismatch(
                f"groups={self.groups} must divide in={self.in_channels} "
                f"and out={self.out_channels}"
            )
        expected = (
            self.out_channels,
            self.in_channels // self.groups,
            self.kernel_h,
            self.kernel_w,
        )
        w = np.ascontiguousarray(np.asarray(self.weights, dtype=np.float32))
        if w.shape != expected:
            raise ShapeMismatch(f"weights shape {w.shape}, expected {expected}")
        b = np.ascontiguousarray(np.asarray(self.bias, dtype=np.float32))
        if b.shape != (self.out_channels,):
            raise ShapeMismatch(f"bias shape {b.shape}, expected ({self.out_channels},)")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)


@dataclass(frozen=True)
class PoolSpec:
    window: int
    stride: int

    def __post_init__(self):
        if self.window < 1 or self.stride < 1:
            raise ValidationError("pool window and stride must be >= 1")


@dataclass(frozen=True)
class LrnSpec:
    n: int
    alpha: float
    beta: float
    k: float

    def __post_init__(self):
        if self.n < 1 or self.n % 2 == 0:
            raise ValidationError("lrn window n must be odd and >= 1")
        # k = 0 is legal (the normalizer then vanishes on all-zero windows,
        # which only well-posed callers with nonzero activations may rely on)
        if self.alpha <= 0 or self.beta <= 0 or self.k < 0:
            raise ValidationError("lrn alpha and beta must be positive, k >= 0")


def _out_dim(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - kernel) // stride + 1


def as_tensor(x) -> np.ndarray:
    t = np.asarray(x, dtype=np.float32)
    if t.ndim != 3:
        raise ShapeMismatch(f"tensor must be rank 3 (depth, h, w), got rank {t.ndim}")
    return t


def conv2d(x: np.ndarray, spec: ConvSpec) -> np.ndarray:
    x = as_tensor(x)
    depth, h, w = x.shape
    if depth != spec.in_channels:
        raise ShapeMismatch(
            f"input depth {depth} != spec.in_channels {spec.in_channels}"
        )
    out_h = _out_dim(h, spec.kernel_h, spec.stride, spec.padding)
    out_w = _out_dim(w, spec.kernel_w, spec.stride, spec.padding)
    if out_h < 1 or out_w < 1:
        raise DegenerateOutput(
            f"conv output {out_h}x{out_w} from input {h}x{w} "
            f"(kernel {spec.kernel_h}x{spec.kernel_w}, stride {spec.stride}, "
            f"pad {spec.padding})"
        )

    if spec.padding:
        p = spec.padding
        xp = np.zeros((depth, h + 2 * p, w + 2 * p), dtype=np.float32)
        xp[:, p : p + h, p : p + w] = x
    else:
        xp = x

    s = spec.stride
    out = np.empty((spec.out_channels, out_h, out_w), dtype=np.float32)
    ocg = spec.out_channels // spec.groups
    icg = spec.in_channels // spec.groups
    for g in range(spec.groups):
        wg = spec.weights[g * ocg : (g + 1) * ocg]
        xg = xp[g * icg : (g + 1) * icg]
        acc = np.zeros((ocg, out_h, out_w), dtype=np.float32)
        for ic in range(icg):
            plane = xg[ic]
            for ky in range(spec.kernel_h):
                rows = plane[ky : ky + (out_h - 1) * s + 1 : s]
                for kx in range(spec.kernel_w):
                    win = rows[:, kx : kx + (out_w - 1) * s + 1 : s]
                    acc += wg[:, ic, ky, kx][:, None, None] * win
        out[g * ocg : (g + 1) * ocg] = acc + spec.bias[g * ocg : (g + 1) * ocg][:, None, None]
    return out


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(as_tensor(x), np.float32(0.0))


def maxpool(x: np.ndarray, spec: PoolSpec) -> np.ndarray:
    x = as_tensor(x)
    depth, h, w = x.shape
    out_h = _out_dim(h, spec.window, spec.stride, 0)
    out_w = _out_dim(w, spec.window, spec.stride, 0)
    if out_h < 1 or out_w < 1:
        raise DegenerateOutput(
            f"pool output {out_h}x{out_w} from input {h}x{w} "
            f"(window {spec.window}, stride {spec.stride})"
        )
    s = spec.stride
    out = np.full((depth, out_h, out_w), -np.inf, dtype=np.float32)
    for wy in range(spec.window):
        rows = x[:, wy : wy + (out_h - 1) * s + 1 : s]
        for wx in range(spec.window):
            np.maximum(out, rows[:, :, wx : wx + (out_w - 1) * s + 1 : s], out=out)
    return out


def lrn(x: np.ndarray, spec: LrnSpec) -> np.ndarray:
    x = as_tensor(x)
    depth = x.shape[0]
    sq = x * x
    half = spec.n // 2
    out = np.empty_like(x)
    for c in range(depth):
        lo = max(0, c - half)
        hi = min(depth, c + half + 1)
        # window truncated at tensor edges; missing neighbors contribute zero
        acc = sq[lo:hi].sum(axis=0, dtype=np.float32)
        scale = (np.float32(spec.k) + np.float32(spec.alpha / spec.n) * acc) ** np.float32(
            spec.beta
        )
        out[c] = x[c] / scale
    return out
