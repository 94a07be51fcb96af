"""Discriminative density-ratio estimation: iterative class-wise reweighting.

The joint-distribution ratio between test and training data factorises class
by class as w_c(x) = beta(x | y=c) * gamma(c), with beta the class-conditional
density ratio and gamma(c) = p_ts(c) / p_tr(c) the prior ratio. Test labels
are unknown, so the procedure alternates between

  1. fitting an importance-weighted classifier with the current weights,
  2. predicting test posteriors,
  3. fitting a soft-matching ratio per class with the posterior column as the
     test-side confidences,
  4. estimating gamma from soft-counted test posteriors over training label
     frequencies, and
  5. combining beta and gamma into new per-sample weights.

Weight convergence alone tends to settle on poor solutions when classes
overlap, so every iteration also records the mutual information between test
samples and their predicted labels, MI = H(mean posterior) - mean H(posterior
row); the returned weights come from the iteration with the highest MI, where
the classifier's decision boundary crosses the sparsest region.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from ddrshift.classifiers import fit_weighted_gnb, fit_wlspc, predict_posterior
from ddrshift.density_ratio import (
    DEFAULT_LAMBDA_GRID,
    default_sigma_grid,
    evaluate_ratio,
    fit_soft_ulsif,
    sample_centers,
    select_hyperparams,
)
from ddrshift.kernels import _as_matrix

__all__ = [
    "DdrConfig",
    "DdrResult",
    "IterationRecord",
    "ddr_fit",
    "estimate_prior_ratio",
    "mutual_information",
    "combine_weights",
    "fit_classwise_ratios",
]

MIN_CLASS_POSTERIOR_MASS = 1e-6


@dataclass
class DdrConfig:
    """Knobs for the iterative procedure.

    ``tol`` is the weight-convergence threshold on ||w_new - w||; when None it
    defaults to 1e-4 * sqrt(n_tr) at fit time. ``sigma``/``lam`` pin the ratio
    hyperparameters directly, otherwise they are selected on the given (or
    default) grids at the first iteration and frozen. ``clf_sigma``/``clf_lam``
    play the same role for the wlspc classifier.
    """

    max_iters: int = 20
    tol: float | None = None
    classifier: str = "gnb"
    n_centers: int = 100
    sigma: float | None = None
    lam: float | None = None
    sigma_grid: tuple[float, ...] | None = None
    lambda_grid: tuple[float, ...] | None = None
    clf_sigma: float | None = None
    clf_lam: float | None = None
    clf_sigma_grid: tuple[float, ...] | None = None
    clf_lambda_grid: tuple[float, ...] | None = None
    cv_folds: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.tol is not None and not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.classifier not in ("gnb", "wlspc"):
            raise ValueError(f"unknown classifier kind {self.classifier!r}")


@dataclass
class IterationRecord:
    """One loop pass: prior ratios, MI, weight movement and any warnings."""

    gamma: np.ndarray
    mi: float
    weight_delta: float
    selected: bool = False
    warnings: tuple[str, ...] = ()


@dataclass
class DdrResult:
    """Final training-sample weights plus the per-iteration trace.

    ``weights`` come from the iteration with the highest recorded MI (earliest
    on ties), which is flagged ``selected`` in the trace. ``classes`` gives the
    label order of each gamma vector.
    """

    weights: np.ndarray
    trace: list[IterationRecord] = field(default_factory=list)
    classes: np.ndarray | None = None

    @property
    def selected_iteration(self) -> int:
        return next(i for i, rec in enumerate(self.trace) if rec.selected)


def _check_posteriors(posteriors) -> np.ndarray:
    P = np.asarray(posteriors, dtype=float)
    if P.ndim != 2 or P.shape[1] < 2:
        raise ValueError("posteriors must be a 2-d matrix with at least two columns")
    if not np.isfinite(P).all() or P.min() < 0.0 or P.max() > 1.0:
        raise ValueError("posterior entries must lie in [0, 1]")
    if np.abs(P.sum(axis=1) - 1.0).max() > 1e-9:
        raise ValueError("posterior rows must sum to 1")
    return P


def mutual_information(posteriors) -> float:
    """MI between samples and predicted labels: H(mean posterior) - mean row entropy.

    Entropies use natural log with 0 ln 0 = 0, so the value lies in
    [0, ln m]. Identical rows give exactly 0 (short-circuited to avoid ulp
    noise) and balanced one-hot binary rows give ln 2.
    """
    P = _check_posteriors(posteriors)
    if (P == P[0]).all():
        return 0.0
    p0 = P.mean(axis=0)
    h0 = -xlogy(p0, p0).sum()
    h_rows = -xlogy(P, P).sum(axis=1)
    # Jensen guarantees non-negativity; guard against rounding
    return max(float(h0 - h_rows.mean()), 0.0)


def estimate_prior_ratio(posteriors, y_tr) -> np.ndarray:
    """Prior ratios gamma(c) = soft-counted test class share / training frequency.

    The test share of class c is the mean of posterior column c; classes are
    ordered as ``np.unique(y_tr)``. Because posterior rows sum to one, the
    returned gamma satisfies sum_c gamma_c * p_tr(c) = 1.
    """
    P = _check_posteriors(posteriors)
    y_tr = np.asarray(y_tr).ravel()
    classes, counts = np.unique(y_tr, return_counts=True)
    if P.shape[1] != classes.shape[0]:
        raise ValueError(
            f"posteriors have {P.shape[1]} columns but training labels contain "
            f"{classes.shape[0]} classes"
        )
    p_ts = P.mean(axis=0)
    p_tr = counts / counts.sum()
    return p_ts / p_tr


def combine_weights(beta_per_class, gamma, y_tr) -> np.ndarray:
    """Per-sample weights w_i = beta_{y_i}(x_i) * gamma_{y_i}.

    ``beta_per_class`` maps each class label to the ratio values of that
    class's training samples, in training order.
    """
    y_tr = np.asarray(y_tr).ravel()
    classes = np.unique(y_tr)
    gamma = np.asarray(gamma, dtype=float).ravel()
    if gamma.shape[0] != classes.shape[0]:
        raise ValueError("gamma length must match the number of classes")
    w = np.empty(y_tr.shape[0])
    for i, c in enumerate(classes):
        if c not in beta_per_class:
            raise ValueError(f"beta missing for class {c!r}")
        beta = np.asarray(beta_per_class[c], dtype=float).ravel()
        mask = y_tr == c
        if beta.shape[0] != mask.sum():
            raise ValueError(f"beta for class {c!r} has length {beta.shape[0]}, expected {mask.sum()}")
        if not np.isfinite(beta).all() or beta.min() < 0.0:
            raise ValueError(f"beta for class {c!r} must be finite and non-negative")
        w[mask] = beta * gamma[i]
    return w


def fit_classwise_ratios(
    X_tr, y_tr, X_ts, posteriors, centers, sigma, lam
) -> tuple[dict, list[str]]:
    """Soft-matching ratio per class, evaluated at that class's training samples.

    Column c of ``posteriors`` supplies the test-side confidences for class c.
    ``sigma`` and ``lam`` may be scalars shared by every class or mappings
    keyed by class label. A class whose total posterior mass on the test data
    falls below 1e-6 gets beta fixed at 1 with a warning instead of an
    ill-posed fit.
    """
    X_tr = _as_matrix(X_tr, "X_tr")
    y_tr = np.asarray(y_tr).ravel()
    P = _check_posteriors(posteriors)
    classes = np.unique(y_tr)
    beta_per_class: dict = {}
    warnings: list[str] = []
    for i, c in enumerate(classes):
        mask = y_tr == c
        conf = P[:, i]
        if conf.sum() < MIN_CLASS_POSTERIOR_MASS:
            beta_per_class[c] = np.ones(int(mask.sum()))
            warnings.append(
                f"class {c!r}: test posterior mass below {MIN_CLASS_POSTERIOR_MASS:g}, ratio fixed at 1"
            )
            continue
        sigma_c = sigma[c] if isinstance(sigma, dict) else sigma
        lam_c = lam[c] if isinstance(lam, dict) else lam
        model = fit_soft_ulsif(X_tr, X_ts, conf, centers, sigma_c, lam_c)
        beta_per_class[c] = evaluate_ratio(model, X_tr[mask])
    return beta_per_class, warnings


def _fit_classifier(X_tr, y_tr, w, config: DdrConfig, clf_params):
    if config.classifier == "gnb":
        return fit_weighted_gnb(X_tr, y_tr, w)
    sigma, lam, centers = clf_params
    return fit_wlspc(X_tr, y_tr, w, sigma, lam, centers)


def ddr_fit(X_tr, y_tr, X_ts, config: DdrConfig | None = None) -> DdrResult:
    """Run the iterative procedure and return weights from the max-MI iteration.

    Ratio centres are drawn from the test set first in the seed stream. Ratio
    hyperparameters are selected per class on the first iteration, minimising
    the held-out soft objective with that class's posterior column as the
    confidences, and frozen for later iterations (as are the wlspc classifier
    hyperparameters, selected once with unit weights). The loop stops at
    ``max_iters`` or when the weight update norm drops to ``tol``.
    """
    config = config or DdrConfig()
    X_tr = _as_matrix(X_tr, "X_tr")
    X_ts = _as_matrix(X_ts, "X_ts")
    y_tr = np.asarray(y_tr).ravel()
    if y_tr.shape[0] != X_tr.shape[0]:
        raise ValueError("y_tr length must match X_tr")
    classes = np.unique(y_tr)
    if classes.shape[0] < 2:
        raise ValueError("need at least two classes in the training labels")
    if X_ts.shape[0] < 1:
        raise ValueError("need at least one test sample")

    n_tr = X_tr.shape[0]
    rng = np.random.default_rng(config.seed)
    centers = sample_centers(X_ts, config.n_centers, rng)

    ratio_sigma: dict | float | None = None
    ratio_lam: dict | float | None = None
    if config.sigma is not None and config.lam is not None:
        ratio_sigma, ratio_lam = float(config.sigma), float(config.lam)
        sigma_grid = lambda_grid = None
        select_seeds = None
    else:
        sigma_grid = config.sigma_grid or default_sigma_grid(
            np.vstack([X_tr, X_ts]), seed=int(rng.integers(2**32))
        )
        lambda_grid = config.lambda_grid or DEFAULT_LAMBDA_GRID
        select_seeds = [int(rng.integers(2**32)) for _ in classes]

    clf_params = None
    if config.classifier == "wlspc":
        clf_centers = sample_centers(X_tr, config.n_centers, rng)
        if config.clf_sigma is not None and config.clf_lam is not None:
            clf_sigma, clf_lam = float(config.clf_sigma), float(config.clf_lam)
        else:
            from ddrshift.classifiers import iwcv_select

            clf_sigma_grid = config.clf_sigma_grid or default_sigma_grid(
                X_tr, seed=int(rng.integers(2**32))
            )
            clf_lambda_grid = config.clf_lambda_grid or DEFAULT_LAMBDA_GRID
            clf_sigma, clf_lam = iwcv_select(
                X_tr,
                y_tr,
                np.ones(n_tr),
                clf_sigma_grid,
                clf_lambda_grid,
                config.cv_folds,
                int(rng.integers(2**32)),
                centers=clf_centers,
            )
        clf_params = (clf_sigma, clf_lam, clf_centers)

    tol = config.tol if config.tol is not None else 1e-4 * np.sqrt(n_tr)

    w = np.ones(n_tr)
    trace: list[IterationRecord] = []
    best_mi = -np.inf
    best_weights = w
    best_iter = 0
    for t in range(config.max_iters):
        model = _fit_classifier(X_tr, y_tr, w, config, clf_params)
        posteriors = predict_posterior(model, X_ts)
        mi = mutual_information(posteriors)
        if ratio_sigma is None:
            ratio_sigma, ratio_lam = {}, {}
            for i, c in enumerate(classes):
                conf = posteriors[:, i]
                # a vanished class falls back to the marginal objective
                conf = conf if conf.sum() >= MIN_CLASS_POSTERIOR_MASS else None
                ratio_sigma[c], ratio_lam[c] = select_hyperparams(
                    X_tr, X_ts, centers, sigma_grid, lambda_grid,
                    config.cv_folds, select_seeds[i], conf=conf,
                )
        beta_per_class, warns = fit_classwise_ratios(
            X_tr, y_tr, X_ts, posteriors, centers, ratio_sigma, ratio_lam
        )
        gamma = estimate_prior_ratio(posteriors, y_tr)
        w_new = combine_weights(beta_per_class, gamma, y_tr)
        delta = float(np.linalg.norm(w_new - w))
        trace.append(IterationRecord(gamma=gamma, mi=mi, weight_delta=delta, warnings=tuple(warns)))
        if mi > best_mi:
            best_mi, best_weights, best_iter = mi, w_new, t
        w = w_new
        if delta <= tol:
            break
    trace[best_iter].selected = True
    return DdrResult(weights=best_weights, trace=trace, classes=classes)
