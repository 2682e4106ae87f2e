"""Correlations, logistic mapping, significance, splits, report assembly."""

import math

import numpy as np
import pytest

import oracles
from mapqa.errors import DegenerateInput, DomainError, TooFewReferences
from mapqa.evaluation import (
    aggregate_reports,
    apply_logistic5,
    evaluate,
    fit_logistic5,
    krocc,
    make_splits,
    mapped_plcc,
    plcc,
    ranks,
    significance,
    srocc,
)
from mapqa.rng import Rng, derive


# --- plcc ---------------------------------------------------------------

def test_plcc_hand_values():
    assert plcc([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0, abs=1e-15)
    assert plcc([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0, abs=1e-15)
    assert plcc([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5, abs=1e-15)


def test_plcc_degenerate():
    with pytest.raises(DegenerateInput):
        plcc([1.0, 1.0, 1.0], [1, 2, 3])
    with pytest.raises(DegenerateInput):
        plcc([1, 2, 3], [5.0, 5.0, 5.0])


def test_plcc_affine_invariance():
    rng = Rng(derive(1, "plcc"))
    x = rng.normal((50,))
    y = rng.normal((50,))
    base = plcc(x, y)
    assert plcc(3.0 * x + 7.0, y) == pytest.approx(base, abs=1e-12)
    assert plcc(x, 0.01 * y - 5.0) == pytest.approx(base, abs=1e-12)


def test_plcc_matches_direct_formula():
    rng = Rng(derive(2, "plcc"))
    for _ in range(20):
        x = rng.normal((40,))
        y = 0.5 * x + rng.normal((40,))
        assert plcc(x, y) == pytest.approx(oracles.pearson_direct(x, y), abs=1e-13)


# --- ranks / srocc ------------------------------------------------------

def test_fractional_ranks():
    assert np.array_equal(ranks([10.0, 20.0, 20.0, 30.0]), [1.0, 2.5, 2.5, 4.0])
    assert np.array_equal(ranks([5.0, 5.0, 5.0]), [2.0, 2.0, 2.0])
    assert np.array_equal(ranks([3.0, 1.0, 2.0]), [3.0, 1.0, 2.0])


def test_srocc_hand_values():
    assert srocc([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0, abs=1e-15)
    assert srocc([1, 2, 3], [3, 1, 2]) == pytest.approx(-0.5, abs=1e-15)


def test_srocc_monotone_transform_invariance():
    rng = Rng(derive(3, "srocc"))
    for _ in range(100):
        x = rng.normal((30,))
        y = rng.normal((30,))
        base = srocc(x, y)
        # identical ranks, so identical floats, not merely close
        assert srocc(x, np.exp(y)) == base
        assert srocc(x**3, y) == base
    assert srocc([0.1, 0.7, 2.0], np.exp([0.1, 0.7, 2.0])) == 1.0


def test_srocc_matches_rank_oracle():
    rng = Rng(derive(4, "srocc"))
    for _ in range(20):
        x = rng.integers(0, 8, (25,)).astype(float)  # plenty of ties
        y = rng.integers(0, 8, (25,)).astype(float)
        try:
            want = oracles.spearman_direct(x, y)
        except ZeroDivisionError:
            continue
        assert srocc(x, y) == pytest.approx(want, abs=1e-12)


# --- krocc --------------------------------------------------------------

def test_krocc_hand_values():
    assert krocc([1, 2, 3], [1, 2, 3]) == 1.0
    assert krocc([1, 2, 3], [3, 1, 2]) == pytest.approx(-1.0 / 3.0, abs=1e-15)
    x = Rng(derive(5, "krocc")).normal((20,))
    assert krocc(x, -x) == -1.0


def test_krocc_ties_count_neither_way():
    # one tied pair in y out of 3 pairs, denominator stays n(n-1)/2
    assert krocc([1, 2, 3], [1, 1, 2]) == pytest.approx(2.0 / 3.0, abs=1e-15)


def test_krocc_matches_both_oracles():
    rng = Rng(derive(6, "krocc"))
    for _ in range(25):
        x = rng.integers(0, 6, (30,)).astype(float)
        y = rng.integers(0, 6, (30,)).astype(float)
        got = krocc(x, y)
        assert got == oracles.kendall_pairs(x, y)
        assert got == oracles.kendall_mergesort(x, y)


def test_srocc_krocc_sign_agreement():
    rng = Rng(derive(7, "sign"))
    for _ in range(20):
        x = rng.normal((25,))
        y = np.exp(x) if rng.uniform() < 0.5 else -(x**3)
        assert math.copysign(1, srocc(x, y)) == math.copysign(1, krocc(x, y))


# --- logistic mapping ---------------------------------------------------

def test_logistic5_formula():
    params = (2.0, 1.5, 0.5, 0.25, -1.0)
    s = np.array([-1.0, 0.0, 0.5, 2.0])
    sig = 1.0 / (1.0 + np.exp(-1.5 * (s - 0.5)))
    want = 2.0 * (0.5 - (1.0 - sig)) + 0.25 * s - 1.0
    assert apply_logistic5(params, s) == pytest.approx(want, abs=1e-12)


def test_logistic5_identity_case():
    mos = np.linspace(0.0, 1.0, 40)
    params = fit_logistic5(mos, mos)
    fitted = apply_logistic5(params, mos)
    assert float(np.sqrt(np.mean((fitted - mos) ** 2))) < 1e-6


def test_logistic5_inverts_affine_predictions():
    mos = Rng(derive(8, "affine")).uniform((30,))
    pred = 2.0 * mos + 3.0
    assert mapped_plcc(mos, pred) == pytest.approx(1.0, abs=1e-9)


def test_logistic5_helps_on_cubic():
    rng = Rng(derive(9, "cubic"))
    mos = rng.uniform((50,))
    pred = (mos - 0.5) ** 3  # monotone, strongly nonlinear
    raw = plcc(pred, mos)
    assert mapped_plcc(mos, pred) >= raw


def test_mapped_plcc_never_below_raw():
    rng = Rng(derive(10, "floor"))
    for _ in range(10):
        mos = rng.uniform((40,))
        pred = mos + 0.3 * rng.normal((40,))
        assert mapped_plcc(mos, pred) >= plcc(pred, mos) - 1e-9


# --- significance -------------------------------------------------------

def test_significance_equal_correlations():
    res = significance(0.9, 0.9, 100)
    assert res.z_stat == 0.0
    assert res.p_value == 1.0
    assert not res.significant_at_05


def test_significance_large_sample():
    res = significance(0.959, 0.887, 10125)
    assert res.significant_at_05
    assert res.p_value < 0.05


def test_significance_small_sample():
    res = significance(0.90, 0.89, 30)
    assert not res.significant_at_05
    assert res.p_value > 0.05


def test_significance_formula():
    r1, r2, n = 0.8, 0.6, 50
    res = significance(r1, r2, n)
    se = math.sqrt(2.0 * 1.06 / (n - 3))
    assert res.z_stat == pytest.approx((math.atanh(r1) - math.atanh(r2)) / se, abs=1e-12)


def test_significance_domain():
    with pytest.raises(DomainError):
        significance(1.0, 0.5, 100)
    with pytest.raises(DomainError):
        significance(0.5, -1.0, 100)
    with pytest.raises(DomainError):
        significance(0.5, 0.4, 3)


# --- splits -------------------------------------------------------------

def test_split_fold_sizes():
    ids = [f"ref{i:02d}" for i in range(81)]
    plans = make_splits(ids, folds=5, repetitions=3, seed=0)
    assert len(plans) == 3
    for plan in plans:
        sizes = sorted(len(f) for f in plan.folds)
        assert sizes == [16, 16, 16, 16, 17]


def test_split_singleton_folds():
    plans = make_splits(["a", "b", "c", "d", "e"], folds=5, repetitions=2, seed=1)
    for plan in plans:
        assert all(len(f) == 1 for f in plan.folds)


def test_split_partition():
    ids = [f"r{i}" for i in range(23)]
    for plan in make_splits(ids, folds=5, repetitions=4, seed=2):
        seen = [ref for fold in plan.folds for ref in fold]
        assert sorted(seen) == sorted(ids)


def test_split_determinism():
    ids = [f"r{i}" for i in range(12)]
    a = make_splits(ids, folds=4, repetitions=5, seed=9)
    b = make_splits(ids, folds=4, repetitions=5, seed=9)
    assert a == b
    distinct = {tuple(make_splits(ids, folds=4, repetitions=1, seed=s)[0].folds) for s in range(10)}
    assert len(distinct) > 1


def test_split_input_order_irrelevant():
    ids = [f"r{i}" for i in range(10)]
    a = make_splits(ids, folds=5, repetitions=2, seed=3)
    b = make_splits(list(reversed(ids)), folds=5, repetitions=2, seed=3)
    assert a == b


def test_split_too_few_references():
    with pytest.raises(TooFewReferences):
        make_splits(["a", "b", "c"], folds=5, repetitions=1, seed=0)
    with pytest.raises(TooFewReferences):
        make_splits(["a", "a", "a", "a", "a"], folds=5, repetitions=1, seed=0)


# --- evaluate / aggregate ----------------------------------------------

def test_evaluate_perfect_predictions():
    rng = Rng(derive(11, "eval"))
    mos = rng.uniform((60,))
    types = ["blur", "noise", "jpeg"] * 20
    levels = [1, 2, 3, 4, 5] * 12
    report = evaluate(mos, mos, types=types, levels=levels)
    scopes = {r.scope: r for r in report.results}
    assert report.results[0].scope == "all"
    assert set(scopes) == {"all", "type:blur", "type:jpeg", "type:noise",
                           "level:1", "level:2", "level:3", "level:4", "level:5"}
    for r in report.results:
        assert not r.degenerate
        assert r.plcc == pytest.approx(1.0, abs=1e-9)
        assert r.srocc == pytest.approx(1.0, abs=1e-12)
        assert r.krocc == pytest.approx(1.0, abs=1e-12)


def test_evaluate_flags_degenerate_group():
    rng = Rng(derive(12, "eval"))
    mos = np.concatenate([rng.uniform((15,)), np.full(15, 0.5)])
    pred = np.concatenate([mos[:15] + 0.01 * rng.normal((15,)), rng.uniform((15,))])
    types = ["ok"] * 15 + ["flat"] * 15
    report = evaluate(pred, mos, types=types)
    scopes = {r.scope: r for r in report.results}
    assert scopes["type:flat"].degenerate
    assert math.isnan(scopes["type:flat"].plcc)
    assert not scopes["type:ok"].degenerate
    assert not scopes["all"].degenerate


def test_evaluate_group_counts_partition_total():
    rng = Rng(derive(13, "eval"))
    mos = rng.uniform((100,))
    pred = mos + 0.05 * rng.normal((100,))
    types = [f"t{i % 4}" for i in range(100)]
    levels = [(i % 5) + 1 for i in range(100)]
    report = evaluate(pred, mos, types=types, levels=levels)
    scopes = {r.scope: r for r in report.results}
    assert scopes["all"].n == 100
    assert sum(r.n for r in report.results if r.scope.startswith("type:")) == 100
    assert sum(r.n for r in report.results if r.scope.startswith("level:")) == 100


def test_evaluate_skips_blank_type_and_missing_level():
    mos = np.array([0.1, 0.4, 0.7, 0.9])
    report = evaluate(mos, mos, types=["", "", "a", "a"], levels=[None, 1, None, 1])
    scopes = [r.scope for r in report.results]
    assert scopes == ["all", "type:a", "level:1"]


def test_aggregate_reports_mean_std():
    mos = np.array([0.1, 0.3, 0.5, 0.7, 0.9])
    r1 = evaluate(mos, mos)
    r2 = evaluate(np.array([0.2, 0.3, 0.1, 0.9, 0.8]), mos)
    rows = aggregate_reports([r1, r2])
    assert len(rows) == 1
    row = rows[0]
    assert row.scope == "all"
    vals = np.array([r1.results[0].srocc, r2.results[0].srocc])
    assert row.srocc == pytest.approx(float(vals.mean()), abs=1e-12)
    assert row.srocc_std == pytest.approx(float(vals.std()), abs=1e-12)


def test_aggregate_reports_excludes_degenerate_units():
    mos = np.array([0.2, 0.5, 0.8, 0.3, 0.7])
    good = evaluate(np.array([0.1, 0.5, 0.9, 0.35, 0.6]), mos)
    flat = evaluate(np.full(5, 0.4), mos)
    rows = aggregate_reports([good, flat], scope_sizes={"all": 77})
    assert rows[0].n == 77
    assert rows[0].srocc == pytest.approx(good.results[0].srocc, abs=1e-12)
