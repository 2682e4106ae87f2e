"""Evaluation protocol: correlations, logistic mapping, splits, reports.

PLCC is the Pearson correlation; following the standard IQA protocol it is
computed after fitting a 5-parameter logistic curve mapping predictions to
subjective scores.  SROCC is the Pearson correlation of fractional ranks
(ties get middle ranks).  KROCC uses the plain n(n-1)/2 denominator with
tied pairs counting as neither concordant nor discordant.

Cross-validation splits are reference-disjoint: reference ids are shuffled
into near-equal folds per repetition and every pair inherits its
reference's fold, so train and test never share image content.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize
import scipy.special

from .errors import DegenerateInput, DomainError, ShapeMismatch, TooFewReferences
from .rng import Rng, derive


def _as_pair(x, y, minimum: int):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.size != y.size:
        raise ShapeMismatch(f"score vectors differ: {x.shape} vs {y.shape}")
    if x.size < minimum:
        raise DegenerateInput(f"need at least {minimum} samples, got {x.size}")
    return x, y


def plcc(x, y) -> float:
    x, y = _as_pair(x, y, 3)
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(dx @ dx)
    sy = float(dy @ dy)
    if sx == 0.0 or sy == 0.0:
        raise DegenerateInput("correlation undefined for a constant vector")
    return float(dx @ dy) / math.sqrt(sx * sy)


def ranks(x) -> np.ndarray:
    """Fractional (middle) ranks, 1-based; ties share the mean of their span."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    out = np.empty(x.size, dtype=np.float64)
    at = 0
    while at < x.size:
        end = at
        while end + 1 < x.size and x[order[end + 1]] == x[order[at]]:
            end += 1
        # positions at..end (0-based) share rank mean = (at+end)/2 + 1
        out[order[at : end + 1]] = (at + end) / 2.0 + 1.0
        at = end + 1
    return out


def srocc(x, y) -> float:
    x, y = _as_pair(x, y, 3)
    return plcc(ranks(x), ranks(y))


def krocc(x, y) -> float:
    x, y = _as_pair(x, y, 2)
    n = x.size
    dx = np.sign(x[:, None] - x[None, :])
    dy = np.sign(y[:, None] - y[None, :])
    iu = np.triu_indices(n, k=1)
    concordant_minus_discordant = float(np.sum(dx[iu] * dy[iu]))
    return concordant_minus_discordant / (n * (n - 1) / 2.0)


# --- logistic mapping ---------------------------------------------------

@dataclass(frozen=True)
class Logistic5Params:
    beta1: float
    beta2: float
    beta3: float
    beta4: float
    beta5: float
    sse: float

    def as_array(self):
        return np.array([self.beta1, self.beta2, self.beta3, self.beta4, self.beta5])


def apply_logistic5(params, s) -> np.ndarray:
    if isinstance(params, Logistic5Params):
        b1, b2, b3, b4, b5 = params.as_array()
    else:
        b1, b2, b3, b4, b5 = params
    s = np.asarray(s, dtype=np.float64)
    return b1 * (0.5 - scipy.special.expit(-b2 * (s - b3))) + b4 * s + b5


# Budget chosen so a 5-parameter fit lands well inside the correlation
# tolerances used downstream while keeping per-split evaluation cheap; the
# start candidates below make the result no worse than the best start even
# when the simplex stalls.
_SIMPLEX_MAX_ITER = 400
_SIMPLEX_TOL = 1e-9


def fit_logistic5(objective, predicted) -> Logistic5Params:
    """Least-squares fit of the 5-parameter logistic mapping predicted -> MOS.

    Derivative-free simplex descent from three starts: the saturating start
    (beta1 spans the MOS range), the pure linear start (beta1 = 0 with the
    least-squares line), and the saturating start with flipped slope sign.
    The returned fit is never worse than the best start, so the linear
    family is always attainable and the mapped PLCC cannot fall below the
    raw PLCC in magnitude.
    """
    mos, pred = _as_pair(objective, predicted, 5)
    spread = float(pred.std())
    if spread == 0.0:
        spread = 1e-12
    slope, intercept = _least_squares_line(pred, mos)
    starts = [
        np.array(
            [mos.max() - mos.min(), 1.0 / spread, pred.mean(), 0.0, mos.mean()]
        ),
        np.array([0.0, 1.0 / spread, pred.mean(), slope, intercept]),
        np.array(
            [mos.max() - mos.min(), -1.0 / spread, pred.mean(), 0.0, mos.mean()]
        ),
    ]

    def sse(params):
        r = apply_logistic5(params, pred) - mos
        return float(r @ r)

    candidates = [(sse(p), p) for p in starts]
    for start in starts:
        result = scipy.optimize.minimize(
            sse,
            start,
            method="Nelder-Mead",
            options={
                "maxiter": _SIMPLEX_MAX_ITER,
                "xatol": _SIMPLEX_TOL,
                "fatol": _SIMPLEX_TOL,
            },
        )
        candidates.append((float(result.fun), result.x))
    best_sse, best = min(candidates, key=lambda c: c[0])
    return Logistic5Params(*(float(v) for v in best), sse=best_sse)


def _least_squares_line(x: np.ndarray, y: np.ndarray):
    dx = x - x.mean()
    denom = float(dx @ dx)
    slope = float(dx @ (y - y.mean())) / denom if denom > 0 else 0.0
    return slope, float(y.mean() - slope * x.mean())


def mapped_plcc(objective, predicted) -> float:
    """PLCC after the logistic mapping (the protocol's reported PLCC)."""
    params = fit_logistic5(objective, predicted)
    return plcc(apply_logistic5(params, np.asarray(predicted, dtype=np.float64)),
                np.asarray(objective, dtype=np.float64))


# --- significance -------------------------------------------------------

_Z_VARIANCE_SCALE = 1.06


@dataclass(frozen=True)
class SignificanceResult:
    z_stat: float
    p_value: float
    significant_at_05: bool


def significance(r1: float, r2: float, n: int) -> SignificanceResult:
    """Compare two correlations measured on n samples via Fisher z-transform.

    The z-transform variance is taken as 1.06/(n-3), slightly inflated over
    the textbook 1/(n-3) to account for non-normality of rating residuals.
    """
    if abs(r1) >= 1.0 or abs(r2) >= 1.0:
        raise DomainError("correlations must lie strictly inside (-1, 1)")
    if n <= 3:
        raise DomainError(f"need n > 3 samples, got {n}")
    z1 = math.atanh(r1)
    z2 = math.atanh(r2)
    se = math.sqrt(2.0 * _Z_VARIANCE_SCALE / (n - 3))
    z_stat = (z1 - z2) / se
    p_value = float(scipy.special.erfc(abs(z_stat) / math.sqrt(2.0)))
    return SignificanceResult(z_stat, p_value, p_value < 0.05)


# --- splits -------------------------------------------------------------

@dataclass(frozen=True)
class SplitPlan:
    repetition: int
    folds: tuple  # tuple of tuples of reference ids


def make_splits(reference_ids, folds: int = 5, repetitions: int = 100, seed: int = 0):
    """Reference-disjoint fold plans, one per repetition.

    References are shuffled with a per-repetition substream and dealt into
    near-equal folds (the first n_refs mod folds folds get one extra).
    """
    ids = sorted(set(reference_ids))
    if len(ids) < folds:
        raise TooFewReferences(
            f"{len(ids)} distinct references cannot fill {folds} folds"
        )
    plans = []
    for rep in range(repetitions):
        shuffled = list(ids)
        Rng(derive(seed, "split", rep)).shuffle(shuffled)
        base = len(ids) // folds
        extra = len(ids) % folds
        fold_lists = []
        at = 0
        for f in range(folds):
            size = base + (1 if f < extra else 0)
            fold_lists.append(tuple(shuffled[at : at + size]))
            at += size
        plans.append(SplitPlan(repetition=rep, folds=tuple(fold_lists)))
    return plans


# --- reports ------------------------------------------------------------

@dataclass(frozen=True)
class ScopeResult:
    scope: str  # "all" | "type:<t>" | "level:<k>"
    n: int
    plcc: float
    srocc: float
    krocc: float
    degenerate: bool = False


@dataclass(frozen=True)
class EvaluationReport:
    results: tuple  # ScopeResult per scope, "all" first


def evaluate(predictions, mos, types=None, levels=None) -> EvaluationReport:
    """Correlations overall and per distortion type/level group.

    A group whose scores are constant (or too small) is flagged degenerate
    and reported with NaN correlations rather than failing the whole report.
    """
    pred, mos = _as_pair(predictions, mos, 3)

    def scope_result(scope, idx):
        p = pred[idx]
        m = mos[idx]
        try:
            return ScopeResult(
                scope=scope,
                n=int(idx.size),
                plcc=mapped_plcc(m, p),
                srocc=srocc(p, m),
                krocc=krocc(p, m),
            )
        except DegenerateInput:
            return ScopeResult(
                scope=scope,
                n=int(idx.size),
                plcc=float("nan"),
                srocc=float("nan"),
                krocc=float("nan"),
                degenerate=True,
            )

    everything = [scope_result("all", np.arange(pred.size))]
    if types is not None:
        labels = np.asarray(types)
        for t in sorted(set(labels.tolist())):
            if t == "":
                continue
            everything.append(scope_result(f"type:{t}", np.flatnonzero(labels == t)))
    if levels is not None:
        present = [lv for lv in levels if lv is not None]
        arr = np.asarray([-1 if lv is None else int(lv) for lv in levels])
        for lv in sorted(set(int(v) for v in present)):
            everything.append(scope_result(f"level:{lv}", np.flatnonzero(arr == lv)))
    return EvaluationReport(results=tuple(everything))


@dataclass(frozen=True)
class AggregateRow:
    scope: str
    n: int
    plcc: float
    srocc: float
    krocc: float
    plcc_std: float
    srocc_std: float
    krocc_std: float


def aggregate_reports(reports, scope_sizes=None):
    """Mean/std of each correlation across evaluation units (rep, fold).

    Degenerate units are excluded per scope.  `scope_sizes` optionally maps
    scope -> total pair count in the underlying dataset for the n column;
    otherwise n is the largest unit size seen.
    """
    by_scope = {}
    order = []
    for report in reports:
        for res in report.results:
            if res.scope not in by_scope:
                by_scope[res.scope] = []
                order.append(res.scope)
            by_scope[res.scope].append(res)
    rows = []
    for scope in order:
        entries = [r for r in by_scope[scope] if not r.degenerate]
        if scope_sizes and scope in scope_sizes:
            n = scope_sizes[scope]
        else:
            n = max((r.n for r in by_scope[scope]), default=0)
        if not entries:
            rows.append(
                AggregateRow(scope, n, *([float("nan")] * 6))
            )
            continue
        p = np.array([r.plcc for r in entries])
        s = np.array([r.srocc for r in entries])
        k = np.array([r.krocc for r in entries])
        rows.append(
            AggregateRow(
                scope=scope,
                n=n,
                plcc=float(p.mean()),
                srocc=float(s.mean()),
                krocc=float(k.mean()),
                plcc_std=float(p.std()),
                srocc_std=float(s.std()),
                krocc_std=float(k.std()),
            )
        )
    return rows
