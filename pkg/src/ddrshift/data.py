"""Synthetic generators, dataset I/O, normalisation and biased sampling splits."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

from ddrshift.kernels import _as_matrix

__all__ = [
    "Dataset",
    "BiasedSplit",
    "gen_two_class_four_cluster",
    "normalize_minmax",
    "biased_split",
    "selection_probabilities",
    "choose_bias_vector",
    "load_csv",
    "load_sparse_text",
]


@dataclass
class Dataset:
    """Feature matrix with optional labels."""

    X: np.ndarray
    y: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        self.X = _as_matrix(self.X, "X")
        if self.y is not None:
            self.y = np.asarray(self.y).ravel()
            if self.y.shape[0] != self.X.shape[0]:
                raise ValueError("label count must match the number of rows")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass
class BiasedSplit:
    """A uniform test half and a biased training subsample with known selection probabilities."""

    train: Dataset
    test: Dataset
    selection_prob: np.ndarray
    oracle_importance: np.ndarray
    omega: np.ndarray


# 2-class 4-cluster problem: cluster centres shared between domains, but the
# class priors and the within-class mixture weights shift from train to test.
_CLUSTERS = {
    1: (np.array([1.0, 5.0]), np.array([4.0, 5.0])),
    2: (np.array([4.0, 1.0]), np.array([1.0, 1.0])),
}
_DOMAIN_PARAMS = {
    "train": (0.5, 0.1),  # class-1 prior, minor-cluster weight
    "test": (0.6, 0.5),
}


def gen_two_class_four_cluster(n: int, domain: str, seed) -> Dataset:
    """Sample the 2-class 4-cluster benchmark for the given domain.

    Training data: equal class priors, each class concentrated 90/10 on its
    two unit-variance Gaussian clusters. Test data: priors 0.6/0.4 and both
    clusters weighted equally, so priors and class likelihoods both shift.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if domain not in _DOMAIN_PARAMS:
        raise ValueError(f"domain must be 'train' or 'test', got {domain!r}")
    prior1, minor_w = _DOMAIN_PARAMS[domain]
    rng = np.random.default_rng(seed)
    labels = np.where(rng.random(n) < prior1, 1, 2)
    minor = rng.random(n) < minor_w
    centers = np.empty((n, 2))
    for c in (1, 2):
        major_c, minor_c = _CLUSTERS[c]
        mask = labels == c
        centers[mask & ~minor] = major_c
        centers[mask & minor] = minor_c
    X = centers + rng.standard_normal((n, 2))
    return Dataset(X, labels, name=f"four-cluster-{domain}")


def normalize_minmax(reference: Dataset, targets: list[Dataset]) -> list[Dataset]:
    """Affine per-feature map sending the reference min/max to -1/+1.

    The same map is applied to every target dataset; points outside the
    reference range land outside [-1, 1] (no clipping). Constant reference
    features map to 0.
    """
    if reference.n < 1:
        raise ValueError("reference dataset is empty")
    mins = reference.X.min(axis=0)
    span = reference.X.max(axis=0) - mins
    keep = span > 0.0

    def apply(X: np.ndarray) -> np.ndarray:
        out = np.zeros_like(X)
        out[:, keep] = 2.0 * ((X[:, keep] - mins[keep]) / span[keep]) - 1.0
        return out

    return [Dataset(apply(t.X), t.y, t.name) for t in targets]


def selection_probabilities(X, omega) -> np.ndarray:
    """Logistic-in-projection keep probabilities P(s=1|x) = e^v / (1 + e^v).

    v = 4 w'(x - xbar) / std(w'(x - xbar)), with the mean and sample standard
    deviation taken over the rows of X. v is clamped to +-35 so the
    probabilities stay strictly inside (0, 1) and their reciprocals finite.
    """
    X = _as_matrix(X, "X")
    omega = np.asarray(omega, dtype=float).ravel()
    if omega.shape[0] != X.shape[1]:
        raise ValueError("omega length must match the feature dimension")
    if not np.linalg.norm(omega) > 0:
        raise ValueError("omega must be non-zero")
    proj = X @ omega
    centred = proj - proj.mean()
    scale = centred.std(ddof=1)
    if scale == 0.0:
        raise ValueError("projection onto omega is constant; selection bias is undefined")
    v = np.clip(4.0 * centred / scale, -35.0, 35.0)
    return expit(v)


def biased_split(data: Dataset, omega, seed) -> BiasedSplit:
    """Uniform test half plus a deliberately biased training subsample.

    Half of the rows (seeded, uniform) form the test set. Each remaining row
    is kept for training independently with probability P(s=1|x) computed
    over those remaining rows; kept rows record their selection probability
    and its reciprocal, the oracle importance weight.
    """
    if data.n < 4:
        raise ValueError("need at least 4 rows to split")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(data.n)
    n_test = data.n // 2
    test_idx, pool_idx = perm[:n_test], perm[n_test:]
    probs = selection_probabilities(data.X[pool_idx], omega)
    keep = rng.random(pool_idx.size) < probs
    if not keep.any():
        raise ValueError("biased subsampling kept no training rows; retry with a new seed")
    kept = pool_idx[keep]

    def subset(idx, suffix):
        y = data.y[idx] if data.y is not None else None
        return Dataset(data.X[idx].copy(), y, name=f"{data.name}{suffix}")

    sel = probs[keep]
    return BiasedSplit(
        train=subset(kept, "-train"),
        test=subset(test_idx, "-test"),
        selection_prob=sel,
        oracle_importance=1.0 / sel,
        omega=np.asarray(omega, dtype=float).ravel().copy(),
    )


def choose_bias_vector(data: Dataset, candidates: int, seed, eval) -> np.ndarray:
    """Pick the bias direction with the widest unweighted-vs-oracle accuracy gap.

    Draws ``candidates`` vectors uniformly from [-1, 1]^d and calls
    ``eval(omega) -> (acc_unweighted, acc_oracle_weighted)`` for each; returns
    the vector maximising acc_oracle - acc_unweighted (first on ties).
    """
    if candidates < 1:
        raise ValueError("need at least one candidate")
    rng = np.random.default_rng(seed)
    omegas = rng.uniform(-1.0, 1.0, size=(candidates, data.d))
    gaps = np.empty(candidates)
    for i, omega in enumerate(omegas):
        acc_unweighted, acc_oracle = eval(omega)
        gaps[i] = acc_oracle - acc_unweighted
    return omegas[int(np.argmax(gaps))].copy()


def load_csv(path, label_column: int | None = None, has_header: bool = False) -> Dataset:
    """Load a dense comma-separated dataset.

    ``label_column`` names the 0-based column holding numeric labels; when
    None the file is read as features only. Malformed or ragged rows raise
    with the offending line number.
    """
    path = Path(path)
    rows: list[list[float]] = []
    labels: list[float] = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for ln, row in enumerate(csv.reader(fh), start=1):
            if ln == 1 and has_header:
                continue
            if not row or all(f.strip() == "" for f in row):
                raise ValueError(f"{path}:{ln}: empty row")
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ValueError(f"{path}:{ln}: expected {width} fields, found {len(row)}")
            if label_column is not None:
                if not 0 <= label_column < len(row):
                    raise ValueError(f"{path}:{ln}: label column {label_column} out of range")
                try:
                    labels.append(float(row[label_column]))
                except ValueError:
                    raise ValueError(
                        f"{path}:{ln}: non-numeric label {row[label_column]!r}"
                    ) from None
            feats = [f for i, f in enumerate(row) if i != label_column]
            try:
                rows.append([float(f) for f in feats])
            except ValueError:
                raise ValueError(f"{path}:{ln}: non-numeric value in row") from None
    if not rows:
        raise ValueError(f"{path}: empty dataset")
    y = np.array(labels) if label_column is not None else None
    return Dataset(np.array(rows), y, name=path.stem)


def load_sparse_text(path, n_features: int | None = None) -> Dataset:
    """Load 'label idx:val idx:val ...' rows with 1-based feature indices.

    Missing indices are zero. The dimension is the largest index seen unless
    ``n_features`` overrides it; indices beyond an explicit dimension raise.
    """
    path = Path(path)
    parsed: list[tuple[int, float, dict[int, float]]] = []
    max_idx = 0
    with open(path, encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            try:
                label = float(parts[0])
            except ValueError:
                raise ValueError(f"{path}:{ln}: non-numeric label {parts[0]!r}") from None
            feats: dict[int, float] = {}
            for tok in parts[1:]:
                idx_s, _, val_s = tok.partition(":")
                try:
                    idx, val = int(idx_s), float(val_s)
                except ValueError:
                    raise ValueError(f"{path}:{ln}: malformed entry {tok!r}") from None
                if idx < 1:
                    raise ValueError(f"{path}:{ln}: feature indices are 1-based, got {idx}")
                feats[idx] = val
                max_idx = max(max_idx, idx)
            parsed.append((ln, label, feats))
    if not parsed:
        raise ValueError(f"{path}: empty dataset")
    d = int(n_features) if n_features is not None else max_idx
    X = np.zeros((len(parsed), d))
    y = np.empty(len(parsed))
    for r, (ln, label, feats) in enumerate(parsed):
        y[r] = label
        for idx, val in feats.items():
            if idx > d:
                raise ValueError(f"{path}:{ln}: feature index {idx} exceeds dimension {d}")
            X[r, idx - 1] = val
    return Dataset(X, y, name=path.stem)
