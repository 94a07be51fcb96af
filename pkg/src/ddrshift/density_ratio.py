"""Direct density-ratio estimation via unconstrained least-squares importance fitting.

uLSIF models the ratio beta(x) = p_test(x) / p_train(x) as a kernel expansion
beta(x) = sum_l alpha_l k(x, c_l) over reference centres c_l and fits alpha by
ridge-regularised least squares, which reduces to the b x b linear system

    (S + lam * I) alpha = s,
    S[l, l'] = mean_i k(x_i, c_l) k(x_i, c_l')   over training samples,
    s[l]     = mean_j k(x_j, c_l)                over test samples.

The soft-matching variant replaces the plain test mean with a confidence
weighted one, s[l] = (1/n_ts) sum_j conf_j k(x_j, c_l), so each test sample
contributes in proportion to its probability of belonging to the class being
matched; S and the objective are unchanged. Model selection minimises the
cross-validated objective J(alpha) = 0.5 alpha'S alpha - s'alpha on held-out
folds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ddrshift.kernels import _as_matrix, kernel_matrix, median_heuristic

__all__ = [
    "RatioModel",
    "fit_ulsif",
    "fit_soft_ulsif",
    "evaluate_ratio",
    "select_hyperparams",
    "ulsif_cv_scores",
    "sample_centers",
    "default_sigma_grid",
    "DEFAULT_LAMBDA_GRID",
]

DEFAULT_LAMBDA_GRID = (1e-3, 1e-2, 1e-1, 1.0, 10.0)

SIGMA_GRID_FACTORS = (0.25, 0.5, 1.0, 2.0, 4.0)


@dataclass
class RatioModel:
    """Fitted kernel expansion for a density ratio.

    ``centers`` holds the b reference points, ``alpha`` their coefficients,
    ``sigma`` the kernel width and ``lam`` the ridge parameter used in the fit.
    """

    centers: np.ndarray
    alpha: np.ndarray
    sigma: float
    lam: float

    def __post_init__(self):
        self.centers = _as_matrix(self.centers, "centers")
        self.alpha = np.asarray(self.alpha, dtype=float).ravel()
        if self.centers.shape[0] < 1:
            raise ValueError("a ratio model needs at least one centre")
        if self.alpha.shape[0] != self.centers.shape[0]:
            raise ValueError("alpha length must match the number of centres")
        if not np.isfinite(self.alpha).all():
            raise ValueError("alpha contains non-finite values")
        self.sigma = float(self.sigma)
        self.lam = float(self.lam)
        if not np.isfinite(self.sigma) or self.sigma <= 0:
            raise ValueError("sigma must be positive and finite")
        if self.lam < 0:
            raise ValueError("lam must be non-negative")


def fit_ulsif(X_tr, X_ts, centers, sigma: float, lam: float) -> RatioModel:
    """Fit the plain uLSIF ratio of the test density over the training density."""
    X_ts = _as_matrix(X_ts, "X_ts")
    return fit_soft_ulsif(X_tr, X_ts, np.ones(X_ts.shape[0]), centers, sigma, lam)


def fit_soft_ulsif(X_tr, X_ts, conf, centers, sigma: float, lam: float) -> RatioModel:
    """Fit a confidence-weighted (soft-matching) uLSIF ratio.

    ``conf`` gives each test sample's probability of belonging to the class
    being matched. With ``conf`` identically 1 this is exactly ``fit_ulsif``;
    the solve is linear in ``conf``, so scaling all confidences scales alpha.
    """
    X_tr = _as_matrix(X_tr, "X_tr")
    X_ts = _as_matrix(X_ts, "X_ts")
    centers = _as_matrix(centers, "centers")
    n_tr, n_ts = X_tr.shape[0], X_ts.shape[0]
    if n_tr < 1 or n_ts < 1:
        raise ValueError("need at least one training and one test sample")
    lam = float(lam)
    if not np.isfinite(lam) or lam <= 0:
        raise ValueError("the unconstrained solve needs lam > 0")
    conf = np.asarray(conf, dtype=float).ravel()
    if conf.shape[0] != n_ts:
        raise ValueError(f"conf has length {conf.shape[0]}, expected {n_ts}")
    if not np.isfinite(conf).all() or conf.min() < 0.0 or conf.max() > 1.0:
        raise ValueError("confidence scores must lie in [0, 1]")
    if not conf.any():
        raise ValueError("all-zero confidence vector: the matched class is empty")

    K_tr = kernel_matrix(X_tr, centers, sigma)
    K_ts = kernel_matrix(X_ts, centers, sigma)
    S = K_tr.T @ K_tr / n_tr
    s = K_ts.T @ conf / n_ts
    alpha = _solve_ridge(S, s, lam)
    return RatioModel(centers.copy(), alpha, sigma, lam)


def _solve_ridge(S: np.ndarray, s: np.ndarray, lam: float) -> np.ndarray:
    A = S + lam * np.eye(S.shape[0])
    try:
        alpha = cho_solve(cho_factor(A), s)
    except (LinAlgError, ValueError) as exc:
        raise ValueError(f"ridge system is singular or ill-posed: {exc}") from exc
    if not np.isfinite(alpha).all():
        raise ValueError("ridge solve produced non-finite coefficients")
    return alpha


def evaluate_ratio(model: RatioModel, X) -> np.ndarray:
    """Evaluate the fitted ratio at the rows of X, clipping negatives to zero.

    The unconstrained solve can produce negative raw values; clipping keeps
    the output usable as non-negative importance weights.
    """
    K = kernel_matrix(X, model.centers, model.sigma)
    return np.maximum(K @ model.alpha, 0.0)


def sample_centers(X, n_centers: int, rng) -> np.ndarray:
    """Draw min(n_centers, n) rows of X uniformly without replacement."""
    X = _as_matrix(X, "X")
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    b = min(int(n_centers), X.shape[0])
    if b < 1:
        raise ValueError("need at least one centre")
    idx = rng.choice(X.shape[0], size=b, replace=False)
    return X[idx].copy()


def default_sigma_grid(X, *, seed: int = 0) -> tuple[float, ...]:
    """Kernel width grid centred on the median heuristic of X."""
    med = median_heuristic(X, seed=seed)
    return tuple(med * f for f in SIGMA_GRID_FACTORS)


def _kfold_indices(n: int, folds: int, rng) -> list[np.ndarray]:
    perm = rng.permutation(n)
    return [np.sort(perm[f::folds]) for f in range(folds)]


def ulsif_cv_scores(
    X_tr, X_ts, centers, sigma_grid, lambda_grid, folds: int = 5, seed: int = 0, conf=None
) -> np.ndarray:
    """Mean held-out objective for every (sigma, lam) grid pair.

    Both sample sets are split into ``folds`` seeded folds. For each pair the
    model is fitted on the retained folds and scored with
    J = 0.5 alpha'S alpha - s'alpha computed from the held-out folds; the
    returned matrix has shape (len(sigma_grid), len(lambda_grid)). When test
    confidences ``conf`` are given, s is the confidence-weighted kernel mean
    of the soft-matching fit.
    """
    X_tr = _as_matrix(X_tr, "X_tr")
    X_ts = _as_matrix(X_ts, "X_ts")
    centers = _as_matrix(centers, "centers")
    sigma_grid = [float(s) for s in np.atleast_1d(sigma_grid)]
    lambda_grid = [float(l) for l in np.atleast_1d(lambda_grid)]
    if not sigma_grid or not lambda_grid:
        raise ValueError("hyperparameter grids must be non-empty")
    folds = int(folds)
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if X_tr.shape[0] < folds or X_ts.shape[0] < folds:
        raise ValueError("not enough samples for the requested number of folds")
    if conf is not None:
        conf = np.asarray(conf, dtype=float).ravel()
        if conf.shape[0] != X_ts.shape[0]:
            raise ValueError("conf length must match the number of test samples")

    rng = np.random.default_rng(seed)
    tr_folds = _kfold_indices(X_tr.shape[0], folds, rng)
    ts_folds = _kfold_indices(X_ts.shape[0], folds, rng)
    n_tr_all = np.arange(X_tr.shape[0])
    n_ts_all = np.arange(X_ts.shape[0])

    def soft_mean(K_part, idx):
        if conf is None:
            return K_part.mean(axis=0)
        return K_part.T @ conf[idx] / idx.size

    scores = np.empty((len(sigma_grid), len(lambda_grid)))
    for si, sigma in enumerate(sigma_grid):
        K_tr = kernel_matrix(X_tr, centers, sigma)
        K_ts = kernel_matrix(X_ts, centers, sigma)
        parts = []
        for f in range(folds):
            tr_out, ts_out = tr_folds[f], ts_folds[f]
            tr_in = np.setdiff1d(n_tr_all, tr_out, assume_unique=True)
            ts_in = np.setdiff1d(n_ts_all, ts_out, assume_unique=True)
            S_in = K_tr[tr_in].T @ K_tr[tr_in] / tr_in.size
            s_in = soft_mean(K_ts[ts_in], ts_in)
            S_out = K_tr[tr_out].T @ K_tr[tr_out] / tr_out.size
            s_out = soft_mean(K_ts[ts_out], ts_out)
            parts.append((S_in, s_in, S_out, s_out))
        for li, lam in enumerate(lambda_grid):
            js = []
            for S_in, s_in, S_out, s_out in parts:
                alpha = _solve_ridge(S_in, s_in, lam)
                js.append(0.5 * alpha @ S_out @ alpha - s_out @ alpha)
            scores[si, li] = np.mean(js)
    return scores


def select_hyperparams(
    X_tr, X_ts, centers, sigma_grid, lambda_grid, folds: int = 5, seed: int = 0, conf=None
) -> tuple[float, float]:
    """Pick the (sigma, lam) grid pair minimising the mean held-out objective.

    Deterministic given the seed; exact ties resolve to the earliest pair in
    (sigma index, lam index) order.
    """
    scores = ulsif_cv_scores(X_tr, X_ts, centers, sigma_grid, lambda_grid, folds, seed, conf)
    sigma_grid = [float(s) for s in np.atleast_1d(sigma_grid)]
    lambda_grid = [float(l) for l in np.atleast_1d(lambda_grid)]
    si, li = np.unravel_index(np.argmin(scores), scores.shape)
    return sigma_grid[si], lambda_grid[li]
