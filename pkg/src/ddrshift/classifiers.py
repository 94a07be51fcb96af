"""Importance-weighted probabilistic classifiers.

Two posterior-producing models are provided. The weighted least-squares
probabilistic classifier (WLSPC) regresses one-hot class indicators on
Gaussian kernel features with per-sample weights on the squared losses, then
clips negative outputs and renormalises the rows to get posteriors. The
weighted Gaussian naive Bayes fits weighted maximum-likelihood priors, means
and per-feature variances and applies Bayes' rule.

Hyperparameters for the WLSPC are picked by importance-weighted
cross-validation (IWCV): held-out 0-1 loss on each fold is reweighted by the
sample importances so the estimate tracks test-domain risk.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve

from ddrshift.kernels import _as_matrix, kernel_matrix

__all__ = [
    "GnbModel",
    "WlspcModel",
    "fit_weighted_gnb",
    "fit_wlspc",
    "predict_posterior",
    "iwcv_select",
    "iwcv_scores",
    "stratified_folds",
]

GNB_VARIANCE_FLOOR = 1e-9


@dataclass
class GnbModel:
    """Weighted Gaussian naive Bayes parameters."""

    classes: np.ndarray
    priors: np.ndarray
    means: np.ndarray
    variances: np.ndarray


@dataclass
class WlspcModel:
    """Per-class ridge coefficients over a shared Gaussian kernel basis."""

    classes: np.ndarray
    centers: np.ndarray
    coef: np.ndarray
    sigma: float
    lam: float
    class_priors: np.ndarray


def _check_labels_weights(X, y, w):
    X = _as_matrix(X, "X")
    y = np.asarray(y).ravel()
    w = np.asarray(w, dtype=float).ravel()
    if y.shape[0] != X.shape[0] or w.shape[0] != X.shape[0]:
        raise ValueError("X, y and w must have the same number of rows")
    if not np.isfinite(w).all() or w.min() < 0.0:
        raise ValueError("weights must be finite and non-negative")
    if not w.any():
        raise ValueError("weights are all zero")
    classes = np.unique(y)
    if classes.shape[0] < 2:
        raise ValueError("need at least two classes in the training labels")
    return X, y, w, classes


def fit_weighted_gnb(X, y, w) -> GnbModel:
    """Weighted maximum-likelihood Gaussian naive Bayes.

    Class priors are the weight share of each class, means and variances are
    weighted per feature. Variances are floored at 1e-9 of the feature's
    global variance so near-duplicate features cannot produce singular
    likelihoods. Rescaling all weights by a constant leaves the model
    unchanged.
    """
    X, y, w, classes = _check_labels_weights(X, y, w)
    m, d = classes.shape[0], X.shape[1]
    priors = np.empty(m)
    means = np.empty((m, d))
    variances = np.empty((m, d))
    total = w.sum()
    for i, c in enumerate(classes):
        mask = y == c
        tw = w[mask].sum()
        if tw == 0.0:
            raise ValueError(f"class {c!r} has zero total weight")
        priors[i] = tw / total
        means[i] = w[mask] @ X[mask] / tw
        diff = X[mask] - means[i]
        variances[i] = w[mask] @ (diff * diff) / tw
    floor = GNB_VARIANCE_FLOOR * X.var(axis=0)
    variances = np.maximum(variances, floor)
    # all-constant features would otherwise give a zero floor
    variances[variances == 0.0] = 1e-12
    return GnbModel(classes, priors, means, variances)


def fit_wlspc(X, y, w, sigma: float, lam: float, centers) -> WlspcModel:
    """Weighted kernel ridge regression of one-hot targets, one column per class.

    For class c the coefficients minimise
    sum_i w_i (phi(x_i)'theta_c - 1[y_i = c])^2 + lam ||theta_c||^2
    over the Gaussian feature map phi against the shared centres. Duplicating
    a sample is equivalent to doubling its weight.
    """
    X, y, w, classes = _check_labels_weights(X, y, w)
    centers = _as_matrix(centers, "centers")
    lam = float(lam)
    if not np.isfinite(lam) or lam < 0:
        raise ValueError("lam must be non-negative and finite")
    Phi = kernel_matrix(X, centers, sigma)
    wPhi = Phi * w[:, None]
    A = Phi.T @ wPhi + lam * np.eye(centers.shape[0])
    T = (y[:, None] == classes[None, :]).astype(float)
    B = wPhi.T @ T
    coef = solve(A, B, assume_a="pos" if lam > 0 else "sym")
    class_priors = np.array([w[y == c].sum() for c in classes]) / w.sum()
    return WlspcModel(classes, centers.copy(), coef, float(sigma), lam, class_priors)


def predict_posterior(model, X) -> np.ndarray:
    """Class-membership probabilities for the rows of X, shape (n, m).

    Rows are non-negative and sum to one. WLSPC outputs are clipped below at
    zero and row-normalised, with all-zero rows falling back to the model's
    training class proportions; GNB applies Bayes' rule with Gaussian
    likelihoods.
    """
    if isinstance(model, GnbModel):
        return _gnb_posterior(model, X)
    if isinstance(model, WlspcModel):
        return _wlspc_posterior(model, X)
    raise TypeError(f"unsupported model type: {type(model).__name__}")


def _gnb_posterior(model: GnbModel, X) -> np.ndarray:
    X = _as_matrix(X, "X")
    if X.shape[1] != model.means.shape[1]:
        raise ValueError("dimension mismatch between X and the fitted model")
    m = model.classes.shape[0]
    loglik = np.empty((X.shape[0], m))
    for i in range(m):
        diff = X - model.means[i]
        loglik[:, i] = (
            -0.5 * (diff * diff / model.variances[i] + np.log(2.0 * np.pi * model.variances[i])).sum(axis=1)
            + np.log(model.priors[i])
        )
    loglik -= loglik.max(axis=1, keepdims=True)
    probs = np.exp(loglik)
    return probs / probs.sum(axis=1, keepdims=True)


def _wlspc_posterior(model: WlspcModel, X) -> np.ndarray:
    raw = kernel_matrix(X, model.centers, model.sigma) @ model.coef
    np.clip(raw, 0.0, None, out=raw)
    sums = raw.sum(axis=1)
    dead = sums == 0.0
    if dead.any():
        raw[dead] = model.class_priors
        sums[dead] = model.class_priors.sum()
    return raw / sums[:, None]


def stratified_folds(y, folds: int, rng) -> list[np.ndarray]:
    """Deal each class's (shuffled) indices round-robin into ``folds`` folds.

    Raises if any class has fewer members than folds, since then some fold
    would miss that class entirely.
    """
    y = np.asarray(y).ravel()
    folds = int(folds)
    if folds < 2:
        raise ValueError("need at least 2 folds")
    classes, counts = np.unique(y, return_counts=True)
    if counts.min() < folds:
        raise ValueError(
            f"degenerate folds: class {classes[counts.argmin()]!r} has "
            f"{counts.min()} samples for {folds} folds"
        )
    assignments = [[] for _ in range(folds)]
    for c in classes:
        idx = rng.permutation(np.flatnonzero(y == c))
        for j, i in enumerate(idx):
            assignments[j % folds].append(i)
    return [np.sort(np.array(f)) for f in assignments]


def iwcv_scores(
    X, y, w, sigma_grid, lambda_grid, folds: int = 5, seed: int = 0, centers=None
) -> np.ndarray:
    """Mean importance-weighted held-out 0-1 error for every grid pair.

    Folds are stratified so every fold contains every class. The held-out
    error of a fold is sum_i w_i 1[wrong_i] / sum_i w_i over its samples.
    """
    X, y, w, _ = _check_labels_weights(X, y, w)
    sigma_grid = [float(s) for s in np.atleast_1d(sigma_grid)]
    lambda_grid = [float(l) for l in np.atleast_1d(lambda_grid)]
    if not sigma_grid or not lambda_grid:
        raise ValueError("hyperparameter grids must be non-empty")
    rng = np.random.default_rng(seed)
    fold_idx = stratified_folds(y, folds, rng)
    if centers is None:
        from ddrshift.density_ratio import sample_centers

        centers = sample_centers(X, 100, rng)
    all_idx = np.arange(X.shape[0])

    scores = np.empty((len(sigma_grid), len(lambda_grid)))
    for si, sigma in enumerate(sigma_grid):
        for li, lam in enumerate(lambda_grid):
            errs = []
            for held in fold_idx:
                kept = np.setdiff1d(all_idx, held, assume_unique=True)
                model = fit_wlspc(X[kept], y[kept], w[kept], sigma, lam, centers)
                probs = predict_posterior(model, X[held])
                pred = model.classes[probs.argmax(axis=1)]
                wh = w[held]
                errs.append(wh[pred != y[held]].sum() / wh.sum() if wh.sum() > 0 else 0.0)
            scores[si, li] = np.mean(errs)
    return scores


def iwcv_select(
    X, y, w, sigma_grid, lambda_grid, folds: int = 5, seed: int = 0, centers=None
) -> tuple[float, float]:
    """Grid pair with the lowest importance-weighted CV error.

    Ties prefer the larger lam, then the larger sigma (smoother models).
    """
    scores = iwcv_scores(X, y, w, sigma_grid, lambda_grid, folds, seed, centers)
    sigma_grid = [float(s) for s in np.atleast_1d(sigma_grid)]
    lambda_grid = [float(l) for l in np.atleast_1d(lambda_grid)]
    best = None
    for si, sigma in enumerate(sigma_grid):
        for li, lam in enumerate(lambda_grid):
            key = (scores[si, li], -lam, -sigma)
            if best is None or key < best[0]:
                best = (key, sigma, lam)
    return best[1], best[2]
