"""Command-line front end: batch studies over feature caches.

Feature extraction and regression are separate commands joined by the
feature-cache CSV, because the regressor studies rerun training hundreds of
times over fixed features.  Every command with the same flags and seed
produces byte-identical output files, whatever --threads is.

Commands: gendata, extract, crossval, sweep, paramstudy, crossdb, train,
predict.  Any flag may also be set in a TOML config file (--config) under a
table named after the command; explicit flags win.  Exit codes: 0 success,
2 validation error, 3 data error, 4 convergence failure.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import evaluation, features, regression, synthetic
from .archive import load_archive
from .dataset import load_manifest
from .errors import DataError, MapqaError, ValidationError
from .features import read_features
from .rng import Rng, derive

REGRESSORS = ("linsvr", "gsvr", "gpr")
METRIC_NAMES = ("psnr", "ssim", "haarpsi")


def _status(msg: str) -> None:
    print(msg, file=sys.stderr)


# --- regressor construction ---------------------------------------------

def train_named_regressor(name: str, X, y, opts=None):
    opts = opts or {}
    if name == "linsvr":
        return regression.train_svr(
            X,
            y,
            kernel="linear",
            C=opts.get("C", 1.0),
            epsilon=opts.get("epsilon", 0.1),
        )
    if name == "gsvr":
        return regression.train_svr(
            X,
            y,
            kernel="rbf",
            C=opts.get("C", 1.0),
            epsilon=opts.get("epsilon", 0.1),
            gamma=opts.get("gamma"),
        )
    if name == "gpr":
        if opts.get("grid"):
            model, _, _ = regression.train_gpr_grid(X, y)
            return model
        return regression.train_gpr(
            X,
            y,
            noise=opts.get("noise", 0.05),
            length_scale=opts.get("length_scale"),
        )
    raise ValidationError(f"unknown regressor '{name}' (use {', '.join(REGRESSORS)})")


# --- protocol runners -----------------------------------------------------

def _scope_sizes(table: features.FeatureTable) -> dict:
    sizes = {"all": len(table.pair_ids)}
    for t in set(table.distortion_types):
        if t:
            sizes[f"type:{t}"] = sum(1 for x in table.distortion_types if x == t)
    for lv in set(lv for lv in table.distortion_levels if lv is not None):
        sizes[f"level:{lv}"] = sum(
            1 for x in table.distortion_levels if x == lv
        )
    return sizes


def _evaluate_split(table, train_idx, test_idx, regressor, opts, scoped=True):
    # scoped=False skips the per-type/level breakdown; the sweep only
    # consumes the overall row and each logistic fit costs real time
    model = train_named_regressor(
        regressor, table.X[train_idx], table.mos[train_idx], opts
    )
    pred = regression.predict(model, table.X[test_idx])
    return evaluation.evaluate(
        pred,
        table.mos[test_idx],
        types=[table.distortion_types[i] for i in test_idx] if scoped else None,
        levels=[table.distortion_levels[i] for i in test_idx] if scoped else None,
    )


def run_crossval(
    table: features.FeatureTable,
    regressor: str,
    folds: int,
    reps: int,
    seed: int,
    threads: int = 1,
    opts=None,
):
    """Reference-disjoint k-fold cross-validation, `reps` repetitions.

    Each (repetition, fold) pair is one evaluation unit; aggregation is the
    mean/std over units per scope.
    """
    refs = np.asarray(table.reference_ids())
    plans = evaluation.make_splits(refs.tolist(), folds, reps, seed)
    units = [(plan, f) for plan in plans for f in range(folds)]

    def one(unit):
        plan, f = unit
        test_refs = set(plan.folds[f])
        test_mask = np.isin(refs, list(test_refs))
        return _evaluate_split(
            table,
            np.flatnonzero(~test_mask),
            np.flatnonzero(test_mask),
            regressor,
            opts,
        )

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        reports = list(pool.map(one, units))
    return evaluation.aggregate_reports(reports, _scope_sizes(table))


def run_sweep(
    table: features.FeatureTable,
    regressor: str,
    ratios,
    reps: int,
    seed: int,
    threads: int = 1,
    opts=None,
):
    """Train-set-size study: per ratio, `reps` random reference-disjoint splits."""
    refs = np.asarray(table.reference_ids())
    unique_refs = sorted(set(refs.tolist()))
    rows = []
    for ratio in ratios:
        if not 1 <= ratio <= 95:
            raise ValidationError(f"train ratio must be in [1, 95], got {ratio}")
        n_train = int(round(ratio / 100.0 * len(unique_refs)))
        n_train = min(max(n_train, 1), len(unique_refs) - 1)

        def one(rep, _ratio=ratio, _n=n_train):
            shuffled = list(unique_refs)
            Rng(derive(seed, "sweep", int(round(_ratio * 100)), rep)).shuffle(shuffled)
            train_refs = set(shuffled[:_n])
            train_mask = np.isin(refs, list(train_refs))
            return _evaluate_split(
                table,
                np.flatnonzero(train_mask),
                np.flatnonzero(~train_mask),
                regressor,
                opts,
                scoped=False,
            )

        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            reports = list(pool.map(one, range(reps)))
        overall = [r.results[0] for r in reports]
        usable = [r for r in overall if not r.degenerate]
        p = np.array([r.plcc for r in usable])
        s = np.array([r.srocc for r in usable])
        k = np.array([r.krocc for r in usable])
        rows.append(
            {
                "ratio": ratio,
                "n_train_refs": n_train,
                "plcc": p.mean(),
                "srocc": s.mean(),
                "krocc": k.mean(),
                "plcc_std": p.std(),
                "srocc_std": s.std(),
                "krocc_std": k.std(),
            }
        )
    return rows


# --- CSV emission ---------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        return "%.9g" % x
    return str(x)


def _scope_sort_key(scope: str):
    if scope == "all":
        return (0, "", 0)
    if scope.startswith("type:"):
        return (1, scope[5:], 0)
    return (2, "", int(scope[6:]))


def write_report_csv(path, rows) -> None:
    rows = sorted(rows, key=lambda r: _scope_sort_key(r.scope))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["scope", "n", "plcc", "srocc", "krocc", "plcc_std", "srocc_std", "krocc_std"]
        )
        for r in rows:
            writer.writerow(
                [r.scope, r.n]
                + [
                    _fmt(v)
                    for v in (r.plcc, r.srocc, r.krocc, r.plcc_std, r.srocc_std, r.krocc_std)
                ]
            )


def _write_dict_csv(path, rows, columns) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


# --- command implementations ----------------------------------------------

def _cmd_gendata(args):
    synthetic.generate_dataset(args.out, args.references, args.seed)
    _status(f"wrote synthetic dataset under {args.out}")
    return 0


def _cmd_extract(args):
    net = load_archive(args.net)
    manifest = load_manifest(args.manifest)
    if args.metric not in METRIC_NAMES:
        raise ValidationError(f"unknown metric '{args.metric}'")
    features.extract_manifest(
        net, manifest, args.metric, args.out, threads=args.threads, log=_status
    )
    _status(f"wrote features to {args.out}")
    return 0


def _cmd_crossval(args):
    table = read_features(args.features)
    rows = run_crossval(
        table,
        args.regressor,
        folds=args.folds,
        reps=args.reps,
        seed=args.seed,
        threads=args.threads,
    )
    write_report_csv(args.out, rows)
    _status(f"wrote report to {args.out}")
    return 0


def _cmd_sweep(args):
    table = read_features(args.features)
    ratios = [int(r) for r in str(args.train_ratios).split(",") if r != ""]
    if not ratios:
        raise ValidationError("no train ratios given")
    rows = run_sweep(
        table,
        args.regressor,
        ratios,
        reps=args.reps,
        seed=args.seed,
        threads=args.threads,
    )
    _write_dict_csv(
        args.out,
        rows,
        [
            "ratio",
            "n_train_refs",
            "plcc",
            "srocc",
            "krocc",
            "plcc_std",
            "srocc_std",
            "krocc_std",
        ],
    )
    _status(f"wrote sweep to {args.out}")
    return 0


def _cmd_paramstudy(args):
    net = load_archive(args.net)
    manifest = load_manifest(args.manifest)
    out = Path(args.out)
    rows = []
    for metric in METRIC_NAMES:
        cache = out.parent / f"{out.stem}_features_{metric}.csv"
        features.extract_manifest(
            net, manifest, metric, cache, threads=args.threads, log=_status
        )
        table = read_features(cache)
        for regressor in REGRESSORS:
            agg = run_crossval(
                table,
                regressor,
                folds=args.folds,
                reps=args.reps,
                seed=args.seed,
                threads=args.threads,
            )
            overall = next(r for r in agg if r.scope == "all")
            rows.append(
                {
                    "metric": metric,
                    "regressor": regressor,
                    "plcc": overall.plcc,
                    "srocc": overall.srocc,
                    "krocc": overall.krocc,
                    "plcc_std": overall.plcc_std,
                    "srocc_std": overall.srocc_std,
                    "krocc_std": overall.krocc_std,
                }
            )
            _status(f"paramstudy: {metric} x {regressor} done")
    _write_dict_csv(
        args.out,
        rows,
        ["metric", "regressor", "plcc", "srocc", "krocc", "plcc_std", "srocc_std", "krocc_std"],
    )
    _status(f"wrote paramstudy to {args.out}")
    return 0


def _normalize_table_mos(table: features.FeatureTable, mode: str):
    if mode == "none":
        return table
    lo = float(table.mos.min())
    hi = float(table.mos.max())
    if hi == lo:
        raise ValidationError("cannot min-max normalize a constant mos column")
    from dataclasses import replace

    return replace(table, mos=(table.mos - lo) / (hi - lo))


def _cmd_crossdb(args):
    train_table = _normalize_table_mos(read_features(args.train_features), args.normalize)
    test_table = _normalize_table_mos(read_features(args.test_features), args.normalize)
    if train_table.X.shape[1] != test_table.X.shape[1]:
        raise ValidationError(
            "train and test feature files have different dimensions "
            f"({train_table.X.shape[1]} vs {test_table.X.shape[1]}); "
            "they must come from the same network"
        )
    model = train_named_regressor(args.regressor, train_table.X, train_table.mos)
    pred = regression.predict(model, test_table.X)
    report = evaluation.evaluate(
        pred,
        test_table.mos,
        types=test_table.distortion_types,
        levels=test_table.distortion_levels,
    )
    rows = evaluation.aggregate_reports([report], _scope_sizes(test_table))
    write_report_csv(args.out, rows)
    _status(f"wrote cross-database report to {args.out}")
    return 0


def _cmd_train(args):
    table = read_features(args.features)
    opts = {
        "C": args.C,
        "epsilon": args.epsilon,
        "gamma": args.gamma,
        "noise": args.noise,
        "length_scale": args.length_scale,
        "grid": bool(args.grid),
    }
    opts = {k: v for k, v in opts.items() if v is not None}
    model = train_named_regressor(args.regressor, table.X, table.mos, opts)
    regression.save_model(model, args.out)
    _status(f"wrote model to {args.out}")
    return 0


def _cmd_predict(args):
    model = regression.load_model(args.model)
    table = read_features(args.features)
    pred = regression.predict(model, table.X)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["pair_id", "prediction"])
        for pid, value in zip(table.pair_ids, pred):
            # full precision so the file carries the exact predicted bits
            writer.writerow([pid, "%.17g" % value])
    _status(f"wrote predictions to {args.out}")
    return 0


# --- argument plumbing ------------------------------------------------------

_DEFAULTS = {
    "gendata": {"references": 10, "seed": 7},
    "extract": {"metric": "haarpsi", "threads": 0},
    "crossval": {"regressor": "gsvr", "folds": 5, "reps": 100, "seed": 0, "threads": 0},
    "sweep": {
        "regressor": "gsvr",
        "train_ratios": "5,10,20,40,60,80",
        "reps": 100,
        "seed": 0,
        "threads": 0,
    },
    "paramstudy": {"folds": 5, "reps": 100, "seed": 0, "threads": 0},
    "crossdb": {"regressor": "gsvr", "normalize": "minmax_per_db"},
    "train": {"regressor": "gsvr"},
    "predict": {},
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mapqa",
        description="Full-reference image quality assessment from "
        "activation-map similarity features.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="TOML config file; flags win over it")
        return p

    p = add("gendata", "generate the synthetic benchmark dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--references", type=int)
    p.add_argument("--seed", type=int)

    p = add("extract", "extract activation-map similarity features")
    p.add_argument("--net", required=True, help="weight archive directory")
    p.add_argument("--manifest", required=True)
    p.add_argument("--metric", choices=METRIC_NAMES)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int)

    p = add("crossval", "reference-disjoint k-fold cross-validation")
    p.add_argument("--features", required=True)
    p.add_argument("--regressor", choices=REGRESSORS)
    p.add_argument("--folds", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", required=True)

    p = add("sweep", "training-set-size study")
    p.add_argument("--features", required=True)
    p.add_argument("--regressor", choices=REGRESSORS)
    p.add_argument("--train-ratios", dest="train_ratios")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", required=True)

    p = add("paramstudy", "3 metrics x 3 regressors grid")
    p.add_argument("--manifest", required=True)
    p.add_argument("--net", required=True)
    p.add_argument("--folds", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", required=True)

    p = add("crossdb", "train on one feature file, test on another")
    p.add_argument("--train-features", dest="train_features", required=True)
    p.add_argument("--test-features", dest="test_features", required=True)
    p.add_argument("--regressor", choices=REGRESSORS)
    p.add_argument("--normalize", choices=("none", "minmax_per_db"))
    p.add_argument("--out", required=True)

    p = add("train", "train one model on a whole feature file")
    p.add_argument("--features", required=True)
    p.add_argument("--regressor", choices=REGRESSORS)
    p.add_argument("--C", dest="C", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--noise", type=float)
    p.add_argument("--length-scale", dest="length_scale", type=float)
    p.add_argument("--grid", action="store_true", default=None,
                   help="GPR: pick length scale and noise by marginal likelihood")
    p.add_argument("--out", required=True)

    p = add("predict", "score a feature file with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)

    return parser


def _apply_config(args) -> None:
    config = {}
    if args.config:
        config_path = Path(args.config)
        if not config_path.is_file():
            raise DataError(f"config file not found: {config_path}")
        with open(config_path, "rb") as fh:
            doc = tomllib.load(fh)
        section = doc.get(args.command, {})
        if not isinstance(section, dict):
            raise ValidationError(f"config table [{args.command}] must be a table")
        config = section
    defaults = _DEFAULTS.get(args.command, {})
    for key, builtin in defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, config.get(key, builtin))
    # settable-by-config extras without builtin defaults
    for key, value in config.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)
    if getattr(args, "threads", None) is not None and args.threads == 0:
        args.threads = os.cpu_count() or 1


_HANDLERS = {
    "gendata": _cmd_gendata,
    "extract": _cmd_extract,
    "crossval": _cmd_crossval,
    "sweep": _cmd_sweep,
    "paramstudy": _cmd_paramstudy,
    "crossdb": _cmd_crossdb,
    "train": _cmd_train,
    "predict": _cmd_predict,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        return _HANDLERS[args.command](args)
    except MapqaError as exc:
        _status(f"error: {exc}")
        return exc.exit_code
    except OSError as exc:
        _status(f"error: {exc}")
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
