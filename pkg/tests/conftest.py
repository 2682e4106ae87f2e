"""Shared fixtures: the toy network and two synthetic benchmark runs.

The heavyweight artifacts (dataset, feature caches, reports) are built once
per session through the real command-line entry points, so every test that
consumes them also exercises the commands end to end.
"""

from __future__ import annotations

import time
from pathlib import Path
from types import SimpleNamespace

import pytest

from mapqa import cli
from mapqa.archive import load_archive

REPO = Path(__file__).resolve().parent.parent
TOY_ARCHIVE = REPO / "archives" / "toy"


def run_cli(*argv) -> int:
    """Run one command in-process, returning its exit code."""
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="session")
def toy_net():
    return load_archive(TOY_ARCHIVE)


@pytest.fixture(scope="session")
def bench(tmp_path_factory):
    """10-reference benchmark: dataset, feature caches, reports, sweep.

    Stage wall times are recorded so runtime budgets can be asserted where
    a criterion pins one.
    """
    root = tmp_path_factory.mktemp("bench10")
    times = {}

    def timed(stage, *argv):
        t0 = time.perf_counter()
        code = run_cli(*argv)
        times[stage] = time.perf_counter() - t0
        assert code == 0, f"stage {stage} exited with {code}"

    data = root / "data"
    timed("gendata", "gendata", "--out", data, "--references", 10, "--seed", 7)
    manifest = data / "manifest.csv"
    feat_haarpsi = root / "features_haarpsi.csv"
    feat_psnr = root / "features_psnr.csv"
    timed(
        "extract_haarpsi",
        "extract", "--net", TOY_ARCHIVE, "--manifest", manifest,
        "--metric", "haarpsi", "--out", feat_haarpsi, "--threads", 1,
    )
    timed(
        "extract_psnr",
        "extract", "--net", TOY_ARCHIVE, "--manifest", manifest,
        "--metric", "psnr", "--out", feat_psnr, "--threads", 1,
    )
    report_hg = root / "report_haarpsi_gsvr.csv"
    timed(
        "crossval_haarpsi_gsvr",
        "crossval", "--features", feat_haarpsi, "--regressor", "gsvr",
        "--folds", 5, "--reps", 20, "--seed", 0, "--threads", 1,
        "--out", report_hg,
    )
    report_pl = root / "report_psnr_linsvr.csv"
    timed(
        "crossval_psnr_linsvr",
        "crossval", "--features", feat_psnr, "--regressor", "linsvr",
        "--folds", 5, "--reps", 20, "--seed", 0, "--threads", 1,
        "--out", report_pl,
    )
    sweep_csv = root / "sweep.csv"
    timed(
        "sweep",
        "sweep", "--features", feat_haarpsi, "--regressor", "gsvr",
        "--train-ratios", "5,10,20,40,60,80", "--reps", 100, "--seed", 0,
        "--threads", 1, "--out", sweep_csv,
    )
    return SimpleNamespace(
        root=root,
        data=data,
        manifest=manifest,
        feat_haarpsi=feat_haarpsi,
        feat_psnr=feat_psnr,
        report_haarpsi_gsvr=report_hg,
        report_psnr_linsvr=report_pl,
        sweep=sweep_csv,
        times=times,
    )


@pytest.fixture(scope="session")
def small5(tmp_path_factory):
    """5-reference dataset with feature caches, for the cheap protocol tests."""
    root = tmp_path_factory.mktemp("small5")
    data = root / "data"
    assert run_cli("gendata", "--out", data, "--references", 5, "--seed", 3) == 0
    manifest = data / "manifest.csv"
    feat_psnr = root / "features_psnr.csv"
    feat_haarpsi = root / "features_haarpsi.csv"
    assert run_cli(
        "extract", "--net", TOY_ARCHIVE, "--manifest", manifest,
        "--metric", "psnr", "--out", feat_psnr, "--threads", 1,
    ) == 0
    assert run_cli(
        "extract", "--net", TOY_ARCHIVE, "--manifest", manifest,
        "--metric", "haarpsi", "--out", feat_haarpsi, "--threads", 1,
    ) == 0
    return SimpleNamespace(
        root=root,
        data=data,
        manifest=manifest,
        feat_psnr=feat_psnr,
        feat_haarpsi=feat_haarpsi,
    )
