"""Similarity metrics on pairs of equal-sized single-channel maps.

These are the per-channel comparison functions applied to activation maps
(and, when desired, to plain grayscale images): peak signal-to-noise ratio,
the structural similarity index, and the Haar wavelet perceptual similarity
index.  Each takes an explicit dynamic range because activation maps have no
fixed scale; callers comparing feature maps pass the adaptive per-pair peak
(see features.py).

All internal arithmetic is float64 with fixed summation order, so results
are reproducible to the bit across runs and thread counts.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, MapTooSmall, ShapeMismatch

PSNR_CAP_DB = 100.0

# Stabilization constants of the Haar perceptual index, stated on the
# conventional 0..255 intensity scale; C is rescaled for other ranges.
_HAAR_C = 30.0
_HAAR_ALPHA = 4.2

_SSIM_K1 = 0.01
_SSIM_K2 = 0.03
_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5


def _as_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeMismatch("metric inputs must be 2-D maps")
    if a.shape != b.shape:
        raise ShapeMismatch(f"map shapes differ: {a.shape} vs {b.shape}")
    return a, b


def psnr(a, b, peak: float) -> float:
    """10*log10(peak^2 / MSE), capped at 100 dB (the cap is the a==b value)."""
    a, b = _as_pair(a, b)
    if peak <= 0:
        raise DomainError(f"peak must be positive, got {peak}")
    diff = a - b
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * np.log10(peak * peak / mse), PSNR_CAP_DB)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def _filter_valid(a: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Separable correlation, valid mode, fixed tap order."""
    win = g.size
    h, w = a.shape
    out_w = w - win + 1
    tmp = np.zeros((h, out_w))
    for k in range(win):
        tmp += g[k] * a[:, k : k + out_w]
    out_h = h - win + 1
    out = np.zeros((out_h, out_w))
    for k in range(win):
        out += g[k] * tmp[k : k + out_h]
    return out


def ssim(a, b, dynamic_range: float) -> float:
    """Mean structural similarity with a Gaussian 11x11 window, sigma 1.5.

    Maps smaller than 11 on a side use the largest odd window that fits,
    with sigma scaled proportionally; below 3x3 there is no meaningful
    window and MapTooSmall is raised.
    """
    a, b = _as_pair(a, b)
    if dynamic_range <= 0:
        raise DomainError(f"dynamic_range must be positive, got {dynamic_range}")
    short = min(a.shape)
    if short < 3:
        raise MapTooSmall(f"ssim needs maps of at least 3x3, got {a.shape}")
    win = _SSIM_WINDOW
    sigma = _SSIM_SIGMA
    if short < win:
        win = short if short % 2 == 1 else short - 1
        sigma = _SSIM_SIGMA * win / _SSIM_WINDOW
    g = _gaussian_window(win, sigma)

    mu_a = _filter_valid(a, g)
    mu_b = _filter_valid(b, g)
    # Weighted second moments without sample-covariance correction.
    var_a = _filter_valid(a * a, g) - mu_a * mu_a
    var_b = _filter_valid(b * b, g) - mu_b * mu_b
    cov = _filter_valid(a * b, g) - mu_a * mu_b

    c1 = (_SSIM_K1 * dynamic_range) ** 2
    c2 = (_SSIM_K2 * dynamic_range) ** 2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def _conv_same(a: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """2-D convolution, 'same' size, zero padding, MATLAB-style anchoring.

    For even kernels the retained window of the full convolution starts at
    offset ceil((k-1)/2), one past where scipy's 'same' would start; the
    Haar filters below are all even-sized, so the anchor choice matters.
    """
    ma, na = a.shape
    mb, nb = kernel.shape
    pt, pl = (mb - 1) // 2, (nb - 1) // 2
    ap = np.zeros((ma + mb - 1, na + nb - 1))
    ap[pt : pt + ma, pl : pl + na] = a
    out = np.zeros((ma, na))
    for i in range(mb):
        rows = ap[mb - 1 - i : mb - 1 - i + ma]
        for j in range(nb):
            out += kernel[i, j] * rows[:, nb - 1 - j : nb - 1 - j + na]
    return out


def _haar_filter(scale: int) -> np.ndarray:
    size = 2**scale
    f = 2.0**-scale * np.ones((size, size))
    f[: size // 2, :] = -f[: size // 2, :]
    return f


def _haar_decompose(img: np.ndarray, scales: int) -> list:
    """Responses [h_1..h_S, v_1..v_S]; v uses the transposed filter."""
    coeffs = []
    for scale in range(1, scales + 1):
        coeffs.append(_conv_same(img, _haar_filter(scale)))
    for scale in range(1, scales + 1):
        coeffs.append(_conv_same(img, _haar_filter(scale).T))
    return coeffs


def _subsample(img: np.ndarray) -> np.ndarray:
    return _conv_same(img, np.full((2, 2), 0.25))[::2, ::2]


def haarpsi(a, b, dynamic_range: float) -> float:
    """Haar wavelet perceptual similarity in [0, 1].

    Three filter scales; the two finest give magnitude-based local
    similarities, the coarsest gives pooling weights; the weighted mean of
    sigmoid-squashed similarities is pushed back through the inverse
    sigmoid and squared.

    The customary half-resolution preprocessing step is applied only when
    the maps are at least 16 on a side, so that three dyadic scales keep
    support on deep-layer activation maps; below 8 on a side the coarsest
    8x8 filter no longer fits and MapTooSmall is raised.  Flat map pairs
    produce an all-zero weight plane (every filter here is zero-mean); they
    carry no structure to disagree on, and score 1.0.
    """
    a, b = _as_pair(a, b)
    if dynamic_range <= 0:
        raise DomainError(f"dynamic_range must be positive, got {dynamic_range}")
    if min(a.shape) < 8:
        raise MapTooSmall(f"haarpsi needs maps of at least 8x8, got {a.shape}")
    if min(a.shape) >= 16:
        a = _subsample(a)
        b = _subsample(b)

    # Constants are calibrated for the 0..255 scale; C scales quadratically
    # with intensity because every filter response is linear in the input.
    c = _HAAR_C * (dynamic_range / 255.0) ** 2
    scales = 3
    ca = _haar_decompose(a, scales)
    cb = _haar_decompose(b, scales)

    weighted = 0.0
    total_weight = 0.0
    for orientation in range(2):
        base = orientation * scales
        w = np.maximum(np.abs(ca[base + 2]), np.abs(cb[base + 2]))
        sim = np.zeros_like(w)
        for s in range(2):
            ga = np.abs(ca[base + s])
            gb = np.abs(cb[base + s])
            sim += (2.0 * ga * gb + c) / (ga * ga + gb * gb + c)
        sim /= 2.0
        squashed = 1.0 / (1.0 + np.exp(-_HAAR_ALPHA * sim))
        weighted += float(np.sum(squashed * w))
        total_weight += float(np.sum(w))

    if total_weight == 0.0:
        return 1.0
    pooled = weighted / total_weight
    # the sigmoid/logit round trip can overshoot 1.0 by a few ulps
    return float(np.clip((np.log(pooled / (1.0 - pooled)) / _HAAR_ALPHA) ** 2, 0.0, 1.0))


METRICS = {"psnr": psnr, "ssim": ssim, "haarpsi": haarpsi}
METRIC_MAXIMUM = {"psnr": PSNR_CAP_DB, "ssim": 1.0, "haarpsi": 1.0}
