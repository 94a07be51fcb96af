"""Command-line interface.

Subcommands: ``synth`` (generate benchmark data), ``ratio`` (fit a marginal
or soft density ratio and emit training weights), ``ddr`` (run the iterative
procedure and emit weights plus trace), ``experiment`` (multi-seed study from
a JSON config) and ``ttest`` (Welch test between two accuracy columns).

With a fixed ``--seed`` every subcommand writes byte-identical output;
timings therefore go to stderr, never into results. Exit codes: 0 success,
2 configuration error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from ddrshift.data import gen_two_class_four_cluster, load_csv, load_sparse_text
from ddrshift.ddr import DdrConfig, ddr_fit
from ddrshift.density_ratio import (
    DEFAULT_LAMBDA_GRID,
    default_sigma_grid,
    evaluate_ratio,
    fit_soft_ulsif,
    fit_ulsif,
    sample_centers,
    select_hyperparams,
)
from ddrshift.experiments import (
    ConfigError,
    ExperimentConfig,
    run_experiment,
    welch_t_test,
)

__all__ = ["main", "build_parser"]


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_lines(lines: list[str], out: str | None):
    text = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _write_text(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load_features(path: str, label_column: int | None, sparse: bool, has_header: bool = False):
    if sparse:
        return load_sparse_text(path)
    return load_csv(path, label_column=label_column, has_header=has_header)


def _dataset_csv_lines(ds) -> list[str]:
    lines = []
    for i in range(ds.n):
        fields = [_fmt(v) for v in ds.X[i]]
        if ds.y is not None:
            label = ds.y[i]
            label_s = str(int(label)) if float(label).is_integer() else _fmt(label)
            fields.insert(0, label_s)
        lines.append(",".join(fields))
    return lines


def cmd_synth(args) -> int:
    train = gen_two_class_four_cluster(args.n_tr, "train", args.seed)
    test = gen_two_class_four_cluster(args.n_ts, "test", args.seed + 1)
    _write_lines(_dataset_csv_lines(train), f"{args.out}_train.csv")
    _write_lines(_dataset_csv_lines(test), f"{args.out}_test.csv")
    print(f"wrote {args.out}_train.csv ({train.n} rows) and {args.out}_test.csv ({test.n} rows)")
    return 0


def cmd_ratio(args) -> int:
    train = _load_features(args.train, args.label_column, args.sparse, args.has_header)
    test = _load_features(args.test, args.label_column, args.sparse, args.has_header)
    conf = np.loadtxt(args.conf, ndmin=1) if args.conf is not None else None
    rng = np.random.default_rng(args.seed)
    centers = sample_centers(test.X, args.n_centers, rng)
    if args.sigma is not None and args.lam is not None:
        sigma, lam = args.sigma, args.lam
    else:
        grid = default_sigma_grid(np.vstack([train.X, test.X]), seed=int(rng.integers(2**32)))
        sigma, lam = select_hyperparams(
            train.X, test.X, centers, grid, DEFAULT_LAMBDA_GRID, args.folds,
            int(rng.integers(2**32)), conf=conf,
        )
    if conf is not None:
        model = fit_soft_ulsif(train.X, test.X, conf, centers, sigma, lam)
    else:
        model = fit_ulsif(train.X, test.X, centers, sigma, lam)
    weights = evaluate_ratio(model, train.X)
    if args.format == "json":
        payload = {"sigma": sigma, "lam": lam, "weights": [float(w) for w in weights]}
        _write_text(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        _write_lines([_fmt(w) for w in weights], args.out)
    return 0


def cmd_ddr(args) -> int:
    train = _load_features(args.train, args.label_column, args.sparse, args.has_header)
    if train.y is None:
        raise ConfigError("ddr needs a labelled training file (--label-column)")
    test_label = args.label_column if args.test_labeled else None
    test = _load_features(args.test, test_label, args.sparse, args.has_header)
    config = DdrConfig(max_iters=args.max_iters, classifier=args.classifier, seed=args.seed)
    result = ddr_fit(train.X, train.y, test.X, config)
    if args.format == "csv":
        _write_lines([_fmt(w) for w in result.weights], args.out)
        return 0
    payload = {
        "classes": [float(c) for c in result.classes],
        "selected_iteration": result.selected_iteration,
        "weights": [float(w) for w in result.weights],
        "trace": [
            {
                "gamma": [float(g) for g in rec.gamma],
                "mi": rec.mi,
                "weight_delta": rec.weight_delta,
                "selected": rec.selected,
                "warnings": list(rec.warnings),
            }
            for rec in result.trace
        ],
    }
    _write_text(json.dumps(payload, indent=2) + "\n", args.out)
    return 0


def cmd_experiment(args) -> int:
    config = ExperimentConfig.from_json_file(args.config)
    overrides = {
        "runs": args.runs,
        "seed": args.seed,
        "n_tr": args.n_tr,
        "n_ts": args.n_ts,
        "classifier": args.classifier,
    }
    raw = config.to_dict()
    for key, val in overrides.items():
        if val is not None:
            raw[key] = val
    if args.methods is not None:
        raw["methods"] = [m.strip() for m in args.methods.split(",") if m.strip()]
    config = ExperimentConfig.from_dict(raw)
    t0 = time.perf_counter()
    report = run_experiment(config)
    print(f"completed {len(next(iter(report.accuracies.values())))} runs "
          f"in {time.perf_counter() - t0:.1f}s", file=sys.stderr)
    _write_text(report.to_csv() if args.format == "csv" else report.to_json(), args.out)
    return 0


def cmd_ttest(args) -> int:
    a = np.loadtxt(args.a, ndmin=1)
    b = np.loadtxt(args.b, ndmin=1)
    significant, p = welch_t_test(a, b, args.alpha)
    payload = {"alpha": args.alpha, "p_value": p, "significant": bool(significant)}
    _write_text(json.dumps(payload, indent=2) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ddrshift",
        description="Density-ratio reweighting tools for covariate-shift classification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate the 2-class 4-cluster benchmark as CSV")
    p.add_argument("--n-tr", type=int, default=500)
    p.add_argument("--n-ts", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ratio", help="fit uLSIF (or soft uLSIF) and emit training weights")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--label-column", type=int, default=None,
                   help="0-based label column to strip from both files")
    p.add_argument("--sparse", action="store_true", help="files use 'label idx:val ...' rows")
    p.add_argument("--has-header", action="store_true", help="skip the first CSV line")
    p.add_argument("--conf", default=None,
                   help="per-test-row confidence file; switches to soft matching")
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--n-centers", type=int, default=100)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_ratio)

    p = sub.add_parser("ddr", help="run the iterative class-wise reweighting")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--label-column", type=int, default=0)
    p.add_argument("--test-labeled", action="store_true",
                   help="test file carries the label column too; it is stripped, never used")
    p.add_argument("--sparse", action="store_true")
    p.add_argument("--has-header", action="store_true", help="skip the first CSV line")
    p.add_argument("--classifier", choices=("gnb", "wlspc"), default="gnb")
    p.add_argument("--max-iters", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_ddr)

    p = sub.add_parser("experiment", help="multi-seed method comparison from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n-tr", type=int, default=None)
    p.add_argument("--n-ts", type=int, default=None)
    p.add_argument("--classifier", choices=("gnb", "wlspc"), default=None)
    p.add_argument("--methods", default=None, help="comma-separated method list")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("ttest", help="Welch t-test between two accuracy columns")
    p.add_argument("--a", required=True, help="file with one value per line")
    p.add_argument("--b", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ttest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"ddrshift: config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"ddrshift: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
