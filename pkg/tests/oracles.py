"""Independent reference implementations used only by the tests.

Every function here recomputes, with a deliberately different algorithm,
something the package computes fast; tests compare the two.  Nothing under
src/ imports this module, and nothing here imports mapqa.
"""

from __future__ import annotations

import numpy as np
from scipy import signal


def conv2d_naive(x, weights, bias, stride, padding, groups=1):
    """Quadruple-loop 2-D convolution in float64.

    x: (in_channels, H, W); weights: (out_channels, in_channels/groups, kh, kw).
    """
    x = np.asarray(x, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    in_ch, h, w = x.shape
    out_ch, icg, kh, kw = weights.shape
    ocg = out_ch // groups
    out_h = (h + 2 * padding - kh) // stride + 1
    out_w = (w + 2 * padding - kw) // stride + 1
    padded = np.zeros((in_ch, h + 2 * padding, w + 2 * padding))
    padded[:, padding : padding + h, padding : padding + w] = x
    out = np.empty((out_ch, out_h, out_w))
    for oc in range(out_ch):
        g = oc // ocg
        for oy in range(out_h):
            for ox in range(out_w):
                acc = 0.0
                for ic in range(icg):
                    patch = padded[
                        g * icg + ic,
                        oy * stride : oy * stride + kh,
                        ox * stride : ox * stride + kw,
                    ]
                    acc += float(np.sum(patch * weights[oc, ic]))
                out[oc, oy, ox] = acc + bias[oc]
    return out


def box_blur3(img):
    """3x3 box blur, same size, edge-replicated."""
    return signal.convolve2d(
        np.asarray(img, dtype=np.float64), np.full((3, 3), 1.0 / 9.0),
        mode="same", boundary="symm",
    )


def maxpool_naive(x, window, stride):
    x = np.asarray(x, dtype=np.float64)
    depth, h, w = x.shape
    out_h = (h - window) // stride + 1
    out_w = (w - window) // stride + 1
    out = np.empty((depth, out_h, out_w))
    for c in range(depth):
        for oy in range(out_h):
            for ox in range(out_w):
                out[c, oy, ox] = x[
                    c,
                    oy * stride : oy * stride + window,
                    ox * stride : ox * stride + window,
                ].max()
    return out


def lrn_naive(x, n, alpha, beta, k):
    """Cross-channel response normalization, scalar loop in float64."""
    x = np.asarray(x, dtype=np.float64)
    depth, h, w = x.shape
    half = n // 2
    out = np.empty_like(x)
    for c in range(depth):
        for y in range(h):
            for z in range(w):
                acc = 0.0
                for nb in range(max(0, c - half), min(depth, c + half + 1)):
                    acc += x[nb, y, z] ** 2
                out[c, y, z] = x[c, y, z] / (k + (alpha / n) * acc) ** beta
    return out


# --- correlation oracles -------------------------------------------------

def pearson_direct(x, y):
    """Pearson correlation straight from the definition."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.size
    mx = sum(x) / n
    my = sum(y) / n
    num = sum((x[i] - mx) * (y[i] - my) for i in range(n))
    den = np.sqrt(sum((v - mx) ** 2 for v in x) * sum((v - my) ** 2 for v in y))
    return num / den


def ranks_by_sort(x):
    """Fractional ranks computed by grouping equal values after a sort."""
    x = np.asarray(x, dtype=np.float64)
    order = sorted(range(x.size), key=lambda i: x[i])
    out = np.empty(x.size)
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and x[order[j + 1]] == x[order[i]]:
            j += 1
        for p in range(i, j + 1):
            out[order[p]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return out


def spearman_direct(x, y):
    return pearson_direct(ranks_by_sort(x), ranks_by_sort(y))


def kendall_pairs(x, y):
    """O(n^2) concordant/discordant count; ties count as neither."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.size
    conc = disc = 0
    for i in range(n):
        for j in range(i + 1, n):
            s = (x[i] - x[j]) * (y[i] - y[j])
            if s > 0:
                conc += 1
            elif s < 0:
                disc += 1
    return (conc - disc) / (n * (n - 1) / 2.0)


def _count_inversions(a):
    """Merge-sort inversion count: pairs i<j with a[i] > a[j] strictly."""
    a = list(a)
    if len(a) <= 1:
        return 0, a
    mid = len(a) // 2
    inv_l, left = _count_inversions(a[:mid])
    inv_r, right = _count_inversions(a[mid:])
    merged = []
    inv = inv_l + inv_r
    i = j = 0
    while i < len(left) and j < len(right):
        if left[i] <= right[j]:
            merged.append(left[i])
            i += 1
        else:
            # right[j] jumps ahead of everything left in `left`
            inv += len(left) - i
            merged.append(right[j])
            j += 1
    merged.extend(left[i:])
    merged.extend(right[j:])
    return inv, merged


def _tie_pairs(values):
    counts = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    return sum(m * (m - 1) // 2 for m in counts.values())


def kendall_mergesort(x, y):
    """Kendall numerator via inversion counting, same n(n-1)/2 denominator.

    Sort by x (ties broken by y ascending); discordant pairs are exactly the
    strict y-inversions of that order.  Concordant pairs follow by counting:
    c + d = total - ties_x - ties_y + ties_xy.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.size
    order = sorted(range(n), key=lambda i: (x[i], y[i]))
    y_sorted = [y[i] for i in order]
    disc, _ = _count_inversions(y_sorted)
    total = n * (n - 1) // 2
    ties_x = _tie_pairs(x.tolist())
    ties_y = _tie_pairs(y.tolist())
    ties_xy = _tie_pairs(list(zip(x.tolist(), y.tolist())))
    conc = total - ties_x - ties_y + ties_xy - disc
    return (conc - disc) / (n * (n - 1) / 2.0)


# --- SVR dual oracle ------------------------------------------------------

def svr_dual_objective(K, y, beta, epsilon):
    """Dual objective in the coefficient form: 0.5 b'Kb + eps|b|_1 - y'b."""
    beta = np.asarray(beta, dtype=np.float64)
    return (
        0.5 * float(beta @ K @ beta)
        + epsilon * float(np.sum(np.abs(beta)))
        - float(y @ beta)
    )


def _project_box_hyperplane(v_up, v_dn, C):
    """Project (v_up, v_dn) onto [0,C]^2n intersected with sum(up-dn)=0.

    The KKT multiplier shifts the two halves in opposite directions; the
    balance function is monotone in the shift, so bisection finds it.
    """
    lo = -(C + float(np.max(np.abs(np.concatenate([v_up, v_dn])))) + 1.0)
    hi = -lo

    def balance(lam):
        up = np.clip(v_up - lam, 0.0, C)
        dn = np.clip(v_dn + lam, 0.0, C)
        return float(np.sum(up) - np.sum(dn))

    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if balance(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    return np.clip(v_up - lam, 0.0, C), np.clip(v_dn + lam, 0.0, C)


def svr_qp_solve(K, y, C, epsilon, iterations=2000):
    """Projected-gradient solver for the epsilon-SVR dual.

    Works on the split variables (up, dn) = (alpha, alpha*) with the smooth
    objective 0.5 (up-dn)'K(up-dn) + eps*sum(up+dn) - y'(up-dn) over the box
    [0, C]^2n and the balance constraint sum(up) = sum(dn).  Step size is
    1/L with L the largest Hessian eigenvalue, so plain projected gradient
    converges; returns the best objective value seen.
    """
    K = np.asarray(K, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    lmax = float(np.linalg.eigvalsh(K).max())
    step = 1.0 / max(2.0 * lmax, 1e-12)
    up = np.zeros(n)
    dn = np.zeros(n)
    best = svr_dual_objective(K, y, up - dn, epsilon)
    for _ in range(iterations):
        kb = K @ (up - dn)
        g_up = kb + epsilon - y
        g_dn = -kb + epsilon + y
        up, dn = _project_box_hyperplane(up - step * g_up, dn - step * g_dn, C)
        value = svr_dual_objective(K, y, up - dn, epsilon)
        if value < best:
            best = value
    return best, up - dn


# --- similarity index oracle ----------------------------------------------

def _conv2_same_matlab(data, kernel):
    """Same-size 2-D convolution anchored the way MATLAB anchors even kernels."""
    rotated = signal.convolve2d(np.rot90(data, 2), np.rot90(kernel, 2), mode="same")
    return np.rot90(rotated, 2)


def _haar_decompose_ref(image, number_of_scales):
    coefficients = np.zeros(image.shape + (2 * number_of_scales,))
    for scale in range(1, number_of_scales + 1):
        haar_filter = 2.0 ** (-scale) * np.ones((2**scale, 2**scale))
        haar_filter[: haar_filter.shape[0] // 2, :] = -haar_filter[
            : haar_filter.shape[0] // 2, :
        ]
        coefficients[:, :, scale - 1] = _conv2_same_matlab(image, haar_filter)
        coefficients[:, :, scale + number_of_scales - 1] = _conv2_same_matlab(
            image, haar_filter.T
        )
    return coefficients


def _subsample_ref(image):
    return _conv2_same_matlab(image, np.ones((2, 2)) / 4.0)[::2, ::2]


def haarpsi_reference(reference_image, distorted_image, subsample=True):
    """Transcription of the index authors' public grayscale construction.

    Inputs are expected on the 0..255 scale; C = 30 and alpha = 4.2 are the
    published constants.  Kept structurally close to the original so it can
    serve as an independent oracle.
    """
    reference_image = np.asarray(reference_image, dtype=np.float64)
    distorted_image = np.asarray(distorted_image, dtype=np.float64)
    C = 30.0
    alpha = 4.2

    if subsample:
        reference_image = _subsample_ref(reference_image)
        distorted_image = _subsample_ref(distorted_image)

    number_of_scales = 3
    coeffs_ref = _haar_decompose_ref(reference_image, number_of_scales)
    coeffs_dist = _haar_decompose_ref(distorted_image, number_of_scales)

    local_similarities = np.zeros(reference_image.shape + (2,))
    weights = np.zeros(reference_image.shape + (2,))
    for orientation in range(2):
        weights[:, :, orientation] = np.maximum(
            np.abs(coeffs_ref[:, :, 2 + orientation * number_of_scales]),
            np.abs(coeffs_dist[:, :, 2 + orientation * number_of_scales]),
        )
        mag_ref = np.abs(
            coeffs_ref[
                :, :, (orientation * number_of_scales, 1 + orientation * number_of_scales)
            ]
        )
        mag_dist = np.abs(
            coeffs_dist[
                :, :, (orientation * number_of_scales, 1 + orientation * number_of_scales)
            ]
        )
        local_similarities[:, :, orientation] = (
            np.sum(
                (2 * mag_ref * mag_dist + C) / (mag_ref**2 + mag_dist**2 + C),
                axis=2,
            )
            / 2
        )

    sigmoid = 1.0 / (1.0 + np.exp(-alpha * local_similarities))
    pooled = np.sum(sigmoid * weights) / np.sum(weights)
    return (np.log(pooled / (1 - pooled)) / alpha) ** 2
