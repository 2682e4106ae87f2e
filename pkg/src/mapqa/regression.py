"""Feature-to-score regressors: epsilon-SVR (SMO solver) and GP regression.

Both model families standardize features per dimension using training-split
statistics (zero-variance features pass through unscaled).  The SVR also
standardizes targets, so the default tube width epsilon=0.1 is expressed in
target standard deviations; the GP regressor keeps raw targets with a zero
prior mean, so its posterior shrinks toward 0 as noise grows.

The SVR dual is solved in the coefficient formulation: one variable
beta_i = alpha_i - alpha_i* per sample, bounded to [-C, C], with the
epsilon term contributing |beta_i| (exact because the two dual halves are
never simultaneously positive at an optimum).  Working-set selection is the
maximal violating pair; a selected step is additionally paused at a sign
change of beta, where the subgradient of |beta| flips.

Model file format (magic ``AMF1``): all integers and floats little-endian,

    byte  0-3   magic b"AMF1"
    byte  4     kind: 1 linear SVR, 2 RBF SVR, 3 GPR
    byte  5-12  u64 feature dimension d
    then length-prefixed float64 arrays (u64 element count + payload):
      SVR: feat_mean[d], feat_std[d],
           scalars[y_mean, y_std, C, epsilon, gamma, bias],
           coefs[m], support[m*d] row-major
      GPR: feat_mean[d], feat_std[d],
           scalars[sigma_f2, length_scale, alpha_rq, noise],
           weights[n], train[n*d] row-major

Round-trip through the file reproduces predictions bit-for-bit.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import (
    CholeskyFailure,
    ConvergenceFailure,
    CorruptFile,
    DimensionMismatch,
    DomainError,
    ValidationError,
)

SMO_TOLERANCE = 1e-3
SMO_MAX_ITERATIONS = 1_000_000
_PRECOMPUTE_LIMIT = 2048  # full kernel matrix below this many rows


# --- standardization ----------------------------------------------------

def _fit_standardizer(X: np.ndarray):
    mean = X.mean(axis=0)
    std = np.sqrt(np.mean((X - mean) ** 2, axis=0))
    std = np.where(std == 0.0, 1.0, std)
    return mean, std


# --- models -------------------------------------------------------------

@dataclass(frozen=True)
class SvrModel:
    kernel: str  # "linear" | "rbf"
    feat_mean: np.ndarray
    feat_std: np.ndarray
    y_mean: float
    y_std: float
    C: float
    epsilon: float
    gamma: float  # 0.0 for the linear kernel
    bias: float
    coefs: np.ndarray  # nonzero dual coefficients, (m,)
    support: np.ndarray  # standardized support vectors, (m, d)


@dataclass(frozen=True)
class GprModel:
    feat_mean: np.ndarray
    feat_std: np.ndarray
    sigma_f2: float
    length_scale: float
    alpha_rq: float
    noise: float
    weights: np.ndarray  # (K + noise*I)^-1 y, (n,)
    train: np.ndarray  # standardized training inputs, (n, d)


# --- kernels ------------------------------------------------------------

def _rbf_cross(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def _rq_cross(A: np.ndarray, B: np.ndarray, sigma_f2, ell, alpha_rq) -> np.ndarray:
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return sigma_f2 * (1.0 + sq / (2.0 * alpha_rq * ell * ell)) ** (-alpha_rq)


def default_gamma(X_std: np.ndarray) -> float:
    """1 / (d * var) on standardized features, mirroring the common heuristic."""
    var = float(np.var(X_std))
    return 1.0 / (X_std.shape[1] * max(var, 1e-12))


# --- SMO ----------------------------------------------------------------

class _KernelTable:
    """Kernel rows for the solver; precomputed when small, cached when large."""

    def __init__(self, X: np.ndarray, kernel: str, gamma: float):
        self._X = X
        self._kernel = kernel
        self._gamma = gamma
        n = X.shape[0]
        if kernel == "linear":
            self.diag = np.sum(X * X, axis=1)
        else:
            self.diag = np.ones(n)
        if n <= _PRECOMPUTE_LIMIT:
            self._full = self._block(X)
            self._rows = None
        else:
            self._full = None
            self._rows = {}

    def _block(self, B: np.ndarray) -> np.ndarray:
        if self._kernel == "linear":
            return self._X @ B.T
        return _rbf_cross(self._X, B, self._gamma)

    def row(self, i: int) -> np.ndarray:
        if self._full is not None:
            return self._full[i]
        got = self._rows.get(i)
        if got is None:
            got = self._block(self._X[i : i + 1])[:, 0]
            self._rows[i] = got
        return got


def _smo(table: _KernelTable, y: np.ndarray, C: float, epsilon: float):
    """Maximal-violating-pair SMO on the coefficient formulation.

    Returns (beta, bias, iterations).  The stopping rule m - M <= tol is the
    KKT gap; bias is the midpoint of the final KKT interval.

    The loop runs tens of thousands of iterations on ill-conditioned kernels,
    so it reuses buffers and keeps the epsilon-subgradient vectors and the
    at-bound index sets up to date incrementally instead of rebuilding them.
    """
    n = y.size
    beta = np.zeros(n)
    f = y.astype(np.float64, copy=True)  # y - K @ beta, updated in place
    eps_up = np.full(n, epsilon)  # epsilon where beta >= 0, else -epsilon
    eps_low = np.full(n, -epsilon)  # epsilon where beta > 0, else -epsilon
    up_val = np.empty(n)
    low_val = np.empty(n)
    scratch = np.empty(n)
    at_upper = set()  # beta >= C: not eligible as the up index
    at_lower = set()  # beta <= -C: not eligible as the low index
    for iteration in range(SMO_MAX_ITERATIONS):
        np.subtract(f, eps_up, out=up_val)
        np.subtract(f, eps_low, out=low_val)
        for idx in at_upper:
            up_val[idx] = -np.inf
        for idx in at_lower:
            low_val[idx] = np.inf
        i = int(np.argmax(up_val))
        j = int(np.argmin(low_val))
        # plain floats from here on: chained numpy scalar arithmetic costs
        # more than the vector work at this problem size
        m_val = float(up_val[i])
        big_m_val = float(low_val[j])
        if m_val - big_m_val <= SMO_TOLERANCE:
            return beta, (m_val + big_m_val) / 2.0, iteration
        row_i = table.row(i)
        row_j = table.row(j)
        eta = float(table.diag[i]) + float(table.diag[j]) - 2.0 * float(row_i[j])
        if eta <= 0.0:
            # identical (or numerically colinear) rows: the line search is
            # flat, take the largest feasible step instead
            eta = 1e-12
        b_i = float(beta[i])
        b_j = float(beta[j])
        delta = min((m_val - big_m_val) / eta, C - b_i, b_j + C)
        if b_i < 0.0:
            delta = min(delta, -b_i)
        if b_j > 0.0:
            delta = min(delta, b_j)
        b_i += delta
        b_j -= delta
        beta[i] = b_i
        beta[j] = b_j
        eps_up[i] = epsilon if b_i >= 0.0 else -epsilon
        eps_low[i] = epsilon if b_i > 0.0 else -epsilon
        eps_up[j] = epsilon if b_j >= 0.0 else -epsilon
        eps_low[j] = epsilon if b_j > 0.0 else -epsilon
        (at_upper.add if b_i >= C else at_upper.discard)(i)
        (at_lower.add if b_i <= -C else at_lower.discard)(i)
        (at_upper.add if b_j >= C else at_upper.discard)(j)
        (at_lower.add if b_j <= -C else at_lower.discard)(j)
        np.subtract(row_i, row_j, out=scratch)
        scratch *= delta
        f -= scratch
    raise ConvergenceFailure(
        f"SMO did not reach KKT tolerance {SMO_TOLERANCE} in "
        f"{SMO_MAX_ITERATIONS} iterations"
    )


def train_svr(
    X,
    y,
    kernel: str = "rbf",
    C: float = 1.0,
    epsilon: float = 0.1,
    gamma: float = None,
) -> SvrModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DimensionMismatch(f"X {X.shape} does not match y ({y.size},)")
    if X.shape[0] < 2:
        raise ValidationError("SVR needs at least 2 training rows")
    if kernel not in ("linear", "rbf"):
        raise ValidationError(f"unknown kernel '{kernel}'")
    if C <= 0 or epsilon < 0:
        raise DomainError("require C > 0 and epsilon >= 0")

    feat_mean, feat_std = _fit_standardizer(X)
    Xs = (X - feat_mean) / feat_std
    y_mean = float(y.mean())
    y_scale = float(np.sqrt(np.mean((y - y_mean) ** 2)))
    if y_scale == 0.0:
        y_scale = 1.0
    ys = (y - y_mean) / y_scale

    if kernel == "rbf":
        if gamma is None:
            gamma = default_gamma(Xs)
        elif gamma <= 0:
            raise DomainError("gamma must be positive for the rbf kernel")
    else:
        gamma = 0.0

    table = _KernelTable(Xs, kernel, gamma)
    beta, bias, _ = _smo(table, ys, C, epsilon)

    keep = beta != 0.0
    return SvrModel(
        kernel=kernel,
        feat_mean=feat_mean,
        feat_std=feat_std,
        y_mean=y_mean,
        y_std=y_scale,
        C=float(C),
        epsilon=float(epsilon),
        gamma=float(gamma),
        bias=float(bias),
        coefs=beta[keep].copy(),
        support=Xs[keep].copy(),
    )


# --- GPR ----------------------------------------------------------------

def train_gpr(
    X,
    y,
    sigma_f2: float = 1.0,
    length_scale: float = None,
    alpha_rq: float = 1.0,
    noise: float = 0.05,
) -> GprModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y.size == 0:
        raise DimensionMismatch("GPR requires at least one training row")
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DimensionMismatch(f"X {X.shape} does not match y ({y.size},)")
    if noise <= 0 or sigma_f2 <= 0 or alpha_rq <= 0:
        raise DomainError("sigma_f2, alpha_rq and noise must be positive")
    if length_scale is None:
        length_scale = float(np.sqrt(X.shape[1]))
    if length_scale <= 0:
        raise DomainError("length_scale must be positive")

    feat_mean, feat_std = _fit_standardizer(X)
    Xs = (X - feat_mean) / feat_std
    K = _rq_cross(Xs, Xs, sigma_f2, length_scale, alpha_rq)
    K[np.diag_indices_from(K)] += noise
    try:
        factor = scipy.linalg.cho_factor(K, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise CholeskyFailure(f"kernel matrix not positive definite: {exc}") from exc
    weights = scipy.linalg.cho_solve(factor, y)
    return GprModel(
        feat_mean=feat_mean,
        feat_std=feat_std,
        sigma_f2=float(sigma_f2),
        length_scale=float(length_scale),
        alpha_rq=float(alpha_rq),
        noise=float(noise),
        weights=weights,
        train=Xs,
    )


def gpr_log_marginal_likelihood(X, y, **params) -> float:
    """Log evidence of the rational-quadratic GP on (X, y)."""
    model = train_gpr(X, y, **params)
    Xs = model.train
    K = _rq_cross(Xs, Xs, model.sigma_f2, model.length_scale, model.alpha_rq)
    K[np.diag_indices_from(K)] += model.noise
    factor = scipy.linalg.cho_factor(K, lower=True)
    y = np.asarray(y, dtype=np.float64)
    half_quad = 0.5 * float(y @ model.weights)
    log_det_half = float(np.sum(np.log(np.diag(factor[0]))))
    return -half_quad - log_det_half - 0.5 * y.size * np.log(2.0 * np.pi)


def train_gpr_grid(X, y, length_scales=None, noises=None):
    """Pick (length_scale, noise) by log marginal likelihood over a grid.

    Deterministic: grids are traversed in order and the first maximum wins.
    Returns (model, chosen_length_scale, chosen_noise).
    """
    X = np.asarray(X, dtype=np.float64)
    base = float(np.sqrt(X.shape[1])) if X.ndim == 2 and X.shape[1] else 1.0
    if length_scales is None:
        length_scales = [base * f for f in (0.25, 0.5, 1.0, 2.0, 4.0)]
    if noises is None:
        noises = [0.005, 0.05, 0.5]
    best = None
    for ell in length_scales:
        for noise in noises:
            score = gpr_log_marginal_likelihood(
                X, y, length_scale=ell, noise=noise
            )
            if best is None or score > best[0]:
                best = (score, ell, noise)
    _, ell, noise = best
    return train_gpr(X, y, length_scale=ell, noise=noise), ell, noise


# --- prediction ---------------------------------------------------------

def predict(model, x):
    """Score one query vector (returns float) or a batch (returns array)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    d = model.feat_mean.size
    if x.ndim != 2 or x.shape[1] != d:
        raise DimensionMismatch(f"query has {x.shape[-1]} features, model has {d}")
    xs = (x - model.feat_mean) / model.feat_std
    if isinstance(model, SvrModel):
        if model.coefs.size == 0:
            raw = np.full(xs.shape[0], model.bias)
        elif model.kernel == "linear":
            raw = xs @ (model.support.T @ model.coefs) + model.bias
        else:
            raw = _rbf_cross(xs, model.support, model.gamma) @ model.coefs + model.bias
        out = raw * model.y_std + model.y_mean
    elif isinstance(model, GprModel):
        k = _rq_cross(xs, model.train, model.sigma_f2, model.length_scale, model.alpha_rq)
        out = k @ model.weights
    else:
        raise ValidationError(f"not a model: {type(model).__name__}")
    return float(out[0]) if single else out


# --- serialization ------------------------------------------------------

_KIND_CODES = {("svr", "linear"): 1, ("svr", "rbf"): 2, ("gpr", ""): 3}


def _pack_array(a: np.ndarray) -> bytes:
    a = np.ascontiguousarray(np.asarray(a, dtype=np.float64).ravel())
    return struct.pack("<Q", a.size) + a.astype("<f8").tobytes()


def save_model(model, path) -> None:
    if isinstance(model, SvrModel):
        kind = _KIND_CODES[("svr", model.kernel)]
        d = model.feat_mean.size
        scalars = [
            model.y_mean,
            model.y_std,
            model.C,
            model.epsilon,
            model.gamma,
            model.bias,
        ]
        arrays = [model.feat_mean, model.feat_std, scalars, model.coefs, model.support]
    elif isinstance(model, GprModel):
        kind = 3
        d = model.feat_mean.size
        scalars = [model.sigma_f2, model.length_scale, model.alpha_rq, model.noise]
        arrays = [model.feat_mean, model.feat_std, scalars, model.weights, model.train]
    else:
        raise ValidationError(f"not a model: {type(model).__name__}")
    blob = b"AMF1" + struct.pack("<BQ", kind, d)
    for a in arrays:
        blob += _pack_array(np.asarray(a))
    Path(path).write_bytes(blob)


class _Reader:
    def __init__(self, raw: bytes, name: str):
        self.raw = raw
        self.at = 0
        self.name = name

    def take(self, n: int) -> bytes:
        if self.at + n > len(self.raw):
            raise CorruptFile(f"{self.name}: truncated model file")
        got = self.raw[self.at : self.at + n]
        self.at += n
        return got

    def array(self) -> np.ndarray:
        (count,) = struct.unpack("<Q", self.take(8))
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(np.float64)


def load_model(path):
    raw = Path(path).read_bytes()
    r = _Reader(raw, str(path))
    if r.take(4) != b"AMF1":
        raise CorruptFile(f"{path}: bad magic, not a model file")
    kind, d = struct.unpack("<BQ", r.take(9))
    feat_mean = r.array()
    feat_std = r.array()
    scalars = r.array()
    if feat_mean.size != d or feat_std.size != d:
        raise CorruptFile(f"{path}: standardizer length does not match dimension")
    if kind in (1, 2):
        if scalars.size != 6:
            raise CorruptFile(f"{path}: SVR model needs 6 scalars")
        coefs = r.array()
        flat = r.array()
        if d == 0 or flat.size != coefs.size * d:
            raise CorruptFile(f"{path}: support vector block has wrong size")
        model = SvrModel(
            kernel="linear" if kind == 1 else "rbf",
            feat_mean=feat_mean,
            feat_std=feat_std,
            y_mean=float(scalars[0]),
            y_std=float(scalars[1]),
            C=float(scalars[2]),
            epsilon=float(scalars[3]),
            gamma=float(scalars[4]),
            bias=float(scalars[5]),
            coefs=coefs,
            support=flat.reshape(coefs.size, d),
        )
    elif kind == 3:
        if scalars.size != 4:
            raise CorruptFile(f"{path}: GPR model needs 4 scalars")
        weights = r.array()
        flat = r.array()
        if d == 0 or flat.size != weights.size * d:
            raise CorruptFile(f"{path}: training block has wrong size")
        model = GprModel(
            feat_mean=feat_mean,
            feat_std=feat_std,
            sigma_f2=float(scalars[0]),
            length_scale=float(scalars[1]),
            alpha_rq=float(scalars[2]),
            noise=float(scalars[3]),
            weights=weights,
            train=flat.reshape(weights.size, d),
        )
    else:
        raise CorruptFile(f"{path}: unknown model kind {kind}")
    if r.at != len(raw):
        raise CorruptFile(f"{path}: {len(raw) - r.at} trailing bytes")
    return model
