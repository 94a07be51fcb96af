"""Gaussian kernel primitives shared across the package.

Every estimator here scores similarity with the Gaussian RBF kernel
k(x, y) = exp(-||x - y||^2 / (2 sigma^2)). Samples carrying a confidence
score w in [0, 1] use the factorised kernel w_x * w_y * k(x, y), which is
the inner product of the scaled feature maps w_x phi(x) and w_y phi(y).
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist, pdist

__all__ = ["gaussian_kernel", "kernel_matrix", "weighted_kernel", "median_heuristic"]


def _check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not np.isfinite(sigma) or sigma <= 0.0:
        raise ValueError(f"kernel width must be positive and finite, got {sigma!r}")
    return sigma


def _as_matrix(arr, name: str) -> np.ndarray:
    out = np.asarray(arr, dtype=float)
    if out.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array of shape (n, d), got ndim={out.ndim}")
    if not np.isfinite(out).all():
        raise ValueError(f"{name} contains non-finite values")
    return out


def gaussian_kernel(x, y, sigma: float) -> float:
    """Gaussian similarity exp(-||x - y||^2 / (2 sigma^2)) between two points."""
    sigma = _check_sigma(sigma)
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("kernel inputs must be finite")
    diff = x - y
    return float(np.exp(-(diff @ diff) / (2.0 * sigma * sigma)))


def kernel_matrix(X, C, sigma: float) -> np.ndarray:
    """Pairwise Gaussian kernel between the rows of X (n x d) and C (b x d).

    Entry (i, l) equals ``gaussian_kernel(X[i], C[l], sigma)``. Squared
    distances come from ``cdist``, so a self-kernel has an exact unit
    diagonal and exact symmetry.
    """
    sigma = _check_sigma(sigma)
    X = _as_matrix(X, "X")
    C = _as_matrix(C, "C")
    if X.shape[1] != C.shape[1]:
        raise ValueError(f"dimension mismatch: X has {X.shape[1]} columns, C has {C.shape[1]}")
    sq = cdist(X, C, "sqeuclidean")
    return np.exp(-sq / (2.0 * sigma * sigma))


def weighted_kernel(x, wx: float, y, wy: float, sigma: float) -> float:
    """Kernel between confidence-weighted samples: wx * wy * k(x, y).

    Confidence scores must lie in [0, 1]; a score of 1 recovers the plain
    kernel and a score of 0 annihilates the similarity.
    """
    for name, w in (("wx", wx), ("wy", wy)):
        if not (0.0 <= w <= 1.0):
            raise ValueError(f"confidence {name}={w!r} outside [0, 1]")
    return float(wx) * float(wy) * gaussian_kernel(x, y, sigma)


def median_heuristic(X, *, max_points: int = 1000, seed: int = 0) -> float:
    """Median pairwise Euclidean distance, the usual centre of a kernel width grid.

    Inputs larger than ``max_points`` rows are uniformly subsampled (seeded)
    to cap the pair count. Raises if fewer than two points are given or if
    the median distance is zero, since a zero bandwidth is unusable.
    """
    X = _as_matrix(X, "X")
    n = X.shape[0]
    if n < 2:
        raise ValueError("median heuristic needs at least two points")
    if n > max_points:
        idx = np.random.default_rng(seed).choice(n, size=max_points, replace=False)
        X = X[idx]
    med = float(np.median(pdist(X)))
    if med == 0.0:
        raise ValueError("median pairwise distance is zero (coincident points)")
    return med
