"""Multi-seed experiment harness comparing reweighting methods.

Each run draws (or splits) a train/test pair, evaluates every configured
method on that same pair, and records test accuracy; pairing the methods
within runs keeps the Welch significance tests honest. A run that fails in
any method is dropped for all methods.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import t as student_t

from ddrshift.classifiers import (
    fit_weighted_gnb,
    fit_wlspc,
    iwcv_select,
    predict_posterior,
    stratified_folds,
)
from ddrshift.data import (
    Dataset,
    biased_split,
    choose_bias_vector,
    gen_two_class_four_cluster,
    load_csv,
    load_sparse_text,
    normalize_minmax,
)
from ddrshift.ddr import DdrConfig, ddr_fit
from ddrshift.density_ratio import (
    DEFAULT_LAMBDA_GRID,
    default_sigma_grid,
    evaluate_ratio,
    fit_ulsif,
    sample_centers,
    select_hyperparams,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentReport",
    "run_experiment",
    "run_synthetic",
    "run_biased",
    "welch_t_test",
    "METHOD_NAMES",
]

METHOD_NAMES = ("unweighted", "ulsif", "ddr", "oracle-imp", "oracle-cvtest")
TASKS = ("synthetic", "biased-csv", "custom")


class ConfigError(ValueError):
    """Invalid experiment configuration or CLI arguments."""


@dataclass
class ExperimentConfig:
    """Declarative description of one experiment."""

    task: str = "synthetic"
    data_path: str | None = None
    train_path: str | None = None
    test_path: str | None = None
    label_column: int = 0
    sparse: bool = False
    has_header: bool = False
    normalize: bool = True
    n_tr: int = 100
    n_ts: int = 2000
    runs: int = 30
    methods: tuple[str, ...] = ("unweighted", "ulsif", "ddr")
    classifier: str = "gnb"
    max_iters: int = 20
    n_candidates: int = 10
    seed: int = 0

    def __post_init__(self):
        self.methods = tuple(self.methods)
        self.validate()

    def validate(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")
        if not self.methods:
            raise ConfigError("methods must be non-empty")
        for m in self.methods:
            if m not in METHOD_NAMES:
                raise ConfigError(f"unknown method {m!r}; expected one of {METHOD_NAMES}")
        if self.classifier not in ("gnb", "wlspc"):
            raise ConfigError(f"unknown classifier {self.classifier!r}")
        if "oracle-imp" in self.methods and self.task != "biased-csv":
            raise ConfigError("oracle-imp needs known selection probabilities (task biased-csv)")
        if self.task == "synthetic" and (self.n_tr < 4 or self.n_ts < 4):
            raise ConfigError("n_tr and n_ts must be at least 4")
        if self.task == "biased-csv" and not self.data_path:
            raise ConfigError("task biased-csv needs data_path")
        if self.task == "custom" and not (self.train_path and self.test_path):
            raise ConfigError("task custom needs train_path and test_path")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a flat JSON object")
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["methods"] = list(self.methods)
        return out


@dataclass
class ExperimentReport:
    """Per-method accuracies over runs with pairwise Welch significance flags.

    ``wall_clock_sec`` is diagnostic only and deliberately excluded from the
    serialised form so repeated runs with the same seed emit identical bytes.
    """

    task: str
    methods: list[str]
    accuracies: dict[str, list[float]]
    means: dict[str, float]
    stds: dict[str, float | None]
    significance: list[dict]
    failed_runs: list[dict]
    config: dict
    wall_clock_sec: float | None = None

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "methods": list(self.methods),
            "accuracies": self.accuracies,
            "means": self.means,
            "stds": self.stds,
            "significance": self.significance,
            "failed_runs": self.failed_runs,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        raw = json.loads(text)
        return cls(**raw)

    def to_csv(self) -> str:
        lines = ["run," + ",".join(self.methods)]
        n_runs = len(next(iter(self.accuracies.values()), []))
        for r in range(n_runs):
            lines.append(f"{r}," + ",".join(repr(self.accuracies[m][r]) for m in self.methods))
        lines.append("mean," + ",".join(repr(self.means[m]) for m in self.methods))
        if n_runs > 1:
            lines.append("std," + ",".join(repr(self.stds[m]) for m in self.methods))
        return "\n".join(lines) + "\n"


def welch_t_test(a, b, alpha: float = 0.05) -> tuple[bool, float]:
    """Two-sided Welch t-test for a mean difference between two samples.

    Unequal variances, Welch-Satterthwaite degrees of freedom, p from the
    Student-t survival function. Two zero-variance samples with equal means
    give p = 1 (not significant).
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least two values")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    if va == 0.0 and vb == 0.0:
        p = 1.0 if a.mean() == b.mean() else 0.0
        return p < alpha, p
    sa, sb = va / a.size, vb / b.size
    t_stat = (a.mean() - b.mean()) / np.sqrt(sa + sb)
    df = (sa + sb) ** 2 / (sa**2 / (a.size - 1) + sb**2 / (b.size - 1))
    p = float(2.0 * student_t.sf(abs(t_stat), df))
    return p < alpha, p


def _child_seed(base: int, *key: int) -> int:
    return int(np.random.SeedSequence(entropy=base, spawn_key=key).generate_state(1)[0])


def _accuracy(pred, y) -> float:
    return float(np.mean(pred == np.asarray(y).ravel()))


def _fit_predict(X_tr, y_tr, w, X_ts, classifier: str, seed: int):
    """Fit the configured classifier with weights w and predict labels for X_ts."""
    if classifier == "gnb":
        model = fit_weighted_gnb(X_tr, y_tr, w)
    else:
        rng = np.random.default_rng(seed)
        centers = sample_centers(X_tr, 100, rng)
        sigma_grid = default_sigma_grid(X_tr, seed=int(rng.integers(2**32)))
        sigma, lam = iwcv_select(
            X_tr, y_tr, w, sigma_grid, DEFAULT_LAMBDA_GRID, 5, int(rng.integers(2**32)), centers=centers
        )
        model = fit_wlspc(X_tr, y_tr, w, sigma, lam, centers)
    probs = predict_posterior(model, X_ts)
    return model.classes[probs.argmax(axis=1)]


def _ulsif_weights(X_tr, X_ts, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    centers = sample_centers(X_ts, 100, rng)
    sigma_grid = default_sigma_grid(np.vstack([X_tr, X_ts]), seed=int(rng.integers(2**32)))
    sigma, lam = select_hyperparams(
        X_tr, X_ts, centers, sigma_grid, DEFAULT_LAMBDA_GRID, 5, int(rng.integers(2**32))
    )
    return evaluate_ratio(fit_ulsif(X_tr, X_ts, centers, sigma, lam), X_tr)


def _cvtest_accuracy(test: Dataset, classifier: str, seed: int, folds: int = 5) -> float:
    """Reference score: stratified k-fold CV accuracy on the labelled test set."""
    rng = np.random.default_rng(seed)
    fold_idx = stratified_folds(test.y, folds, rng)
    all_idx = np.arange(test.n)
    accs = []
    for f, held in enumerate(fold_idx):
        kept = np.setdiff1d(all_idx, held, assume_unique=True)
        pred = _fit_predict(
            test.X[kept], test.y[kept], np.ones(kept.size), test.X[held], classifier, _child_seed(seed, f)
        )
        accs.append(_accuracy(pred, test.y[held]))
    return float(np.mean(accs))


def _evaluate_methods(
    train: Dataset,
    test: Dataset,
    methods,
    classifier: str,
    max_iters: int,
    seed: int,
    oracle_weights=None,
) -> dict[str, float]:
    accs: dict[str, float] = {}
    for k, method in enumerate(methods):
        mseed = _child_seed(seed, k)
        if method == "oracle-cvtest":
            accs[method] = _cvtest_accuracy(test, classifier, mseed)
            continue
        if method == "unweighted":
            w = np.ones(train.n)
        elif method == "ulsif":
            w = _ulsif_weights(train.X, test.X, mseed)
        elif method == "ddr":
            cfg = DdrConfig(max_iters=max_iters, classifier=classifier, seed=mseed)
            w = ddr_fit(train.X, train.y, test.X, cfg).weights
        elif method == "oracle-imp":
            if oracle_weights is None:
                raise ConfigError("oracle-imp requires a biased split with known probabilities")
            w = oracle_weights
        else:
            raise ConfigError(f"unknown method {method!r}")
        pred = _fit_predict(train.X, train.y, w, test.X, classifier, _child_seed(mseed, 1))
        accs[method] = _accuracy(pred, test.y)
    return accs


def _aggregate(config: ExperimentConfig, per_run: list[dict[str, float]], failed: list[dict], t0: float) -> ExperimentReport:
    if not per_run:
        raise RuntimeError(f"all {config.runs} runs failed; last error: {failed[-1]['error']}")
    methods = list(config.methods)
    accuracies = {m: [run[m] for run in per_run] for m in methods}
    means = {m: float(np.mean(accuracies[m])) for m in methods}
    stds = {
        m: (float(np.std(accuracies[m], ddof=1)) if len(accuracies[m]) > 1 else None)
        for m in methods
    }
    significance = []
    for i, ma in enumerate(methods):
        for mb in methods[i + 1 :]:
            if len(accuracies[ma]) > 1:
                sig, p = welch_t_test(accuracies[ma], accuracies[mb])
            else:
                sig, p = False, 1.0
            significance.append({"a": ma, "b": mb, "p": p, "significant": bool(sig)})
    return ExperimentReport(
        task=config.task,
        methods=methods,
        accuracies=accuracies,
        means=means,
        stds=stds,
        significance=significance,
        failed_runs=failed,
        config=config.to_dict(),
        wall_clock_sec=time.perf_counter() - t0,
    )


def run_synthetic(config: ExperimentConfig) -> ExperimentReport:
    """Multi-seed study on the 2-class 4-cluster benchmark."""
    if config.task != "synthetic":
        raise ConfigError("run_synthetic needs task='synthetic'")
    t0 = time.perf_counter()
    per_run: list[dict[str, float]] = []
    failed: list[dict] = []
    for r in range(config.runs):
        train = gen_two_class_four_cluster(config.n_tr, "train", _child_seed(config.seed, 1, r, 0))
        test = gen_two_class_four_cluster(config.n_ts, "test", _child_seed(config.seed, 1, r, 1))
        try:
            per_run.append(
                _evaluate_methods(
                    train, test, config.methods, config.classifier, config.max_iters,
                    _child_seed(config.seed, 1, r, 2),
                )
            )
        except Exception as exc:  # a failed run is dropped for every method
            failed.append({"run": r, "error": f"{type(exc).__name__}: {exc}"})
    return _aggregate(config, per_run, failed, t0)


def _load_dataset(path: str, label_column: int, sparse: bool, has_header: bool = False) -> Dataset:
    if sparse:
        return load_sparse_text(path)
    return load_csv(path, label_column=label_column, has_header=has_header)


def _split_with_retry(data: Dataset, omega, seed: int, attempts: int = 10):
    last = None
    for a in range(attempts):
        try:
            return biased_split(data, omega, _child_seed(seed, a))
        except ValueError as exc:
            last = exc
    raise ValueError(f"biased_split failed after {attempts} attempts: {last}")


def run_biased(config: ExperimentConfig) -> ExperimentReport:
    """Biased-sampling study on a labelled dataset file.

    The data is min-max normalised to [-1, 1] before splitting; the bias
    direction is chosen once from ``n_candidates`` random vectors by the
    widest gap between the unweighted and oracle-weighted accuracies, then
    each run draws its own biased split.
    """
    if config.task != "biased-csv":
        raise ConfigError("run_biased needs task='biased-csv'")
    t0 = time.perf_counter()
    data = _load_dataset(config.data_path, config.label_column, config.sparse, config.has_header)
    if data.y is None:
        raise ConfigError("biased-csv task needs labels")
    if config.normalize:
        data = normalize_minmax(data, [data])[0]

    eval_seed = _child_seed(config.seed, 0, 0)

    def gap_eval(omega):
        split = _split_with_retry(data, omega, eval_seed)
        seed_u = _child_seed(eval_seed, 1)
        acc_u = _accuracy(
            _fit_predict(split.train.X, split.train.y, np.ones(split.train.n), split.test.X,
                         config.classifier, seed_u),
            split.test.y,
        )
        acc_o = _accuracy(
            _fit_predict(split.train.X, split.train.y, split.oracle_importance, split.test.X,
                         config.classifier, seed_u),
            split.test.y,
        )
        return acc_u, acc_o

    try:
        omega = choose_bias_vector(data, config.n_candidates, _child_seed(config.seed, 0, 1), gap_eval)
    except ValueError as exc:
        # setup failure, e.g. constant data admits no biased split along any direction
        raise ConfigError(f"bias direction selection failed on this dataset: {exc}") from exc

    per_run: list[dict[str, float]] = []
    failed: list[dict] = []
    for r in range(config.runs):
        try:
            split = _split_with_retry(data, omega, _child_seed(config.seed, 1, r, 0))
            per_run.append(
                _evaluate_methods(
                    split.train, split.test, config.methods, config.classifier, config.max_iters,
                    _child_seed(config.seed, 1, r, 1), oracle_weights=split.oracle_importance,
                )
            )
        except Exception as exc:
            failed.append({"run": r, "error": f"{type(exc).__name__}: {exc}"})
    return _aggregate(config, per_run, failed, t0)


def run_custom(config: ExperimentConfig) -> ExperimentReport:
    """Evaluate the methods on an externally supplied train/test pair."""
    if config.task != "custom":
        raise ConfigError("run_custom needs task='custom'")
    t0 = time.perf_counter()
    train = _load_dataset(config.train_path, config.label_column, config.sparse, config.has_header)
    test = _load_dataset(config.test_path, config.label_column, config.sparse, config.has_header)
    if train.y is None or test.y is None:
        raise ConfigError("custom task needs labelled train and test files")
    if config.normalize:
        combined = Dataset(np.vstack([train.X, test.X]), name="combined")
        train, test = normalize_minmax(combined, [train, test])
    per_run: list[dict[str, float]] = []
    failed: list[dict] = []
    for r in range(config.runs):
        try:
            per_run.append(
                _evaluate_methods(
                    train, test, config.methods, config.classifier, config.max_iters,
                    _child_seed(config.seed, 1, r),
                )
            )
        except Exception as exc:
            failed.append({"run": r, "error": f"{type(exc).__name__}: {exc}"})
    return _aggregate(config, per_run, failed, t0)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Dispatch on the configured task."""
    if config.task == "synthetic":
        return run_synthetic(config)
    if config.task == "biased-csv":
        return run_biased(config)
    return run_custom(config)
