#!/usr/bin/env python3
"""Regenerate the small two-class CSVs bundled under datasets/.

Sources are the public-domain datasets shipped with scikit-learn, written as
plain label-first CSV so the package itself never needs sklearn. Run from the
repository root:

    python3 scripts/make_bundled_datasets.py
"""

from pathlib import Path

import numpy as np
from sklearn.datasets import load_breast_cancer, load_iris, load_wine

OUT = Path(__file__).resolve().parent.parent / "datasets"


def write_csv(path: Path, X: np.ndarray, y: np.ndarray):
    lines = []
    for label, row in zip(y, X):
        lines.append(",".join([str(int(label))] + [repr(float(v)) for v in row]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {path} ({X.shape[0]} rows, {X.shape[1]} features)")


def main():
    OUT.mkdir(exist_ok=True)

    data = load_breast_cancer()
    write_csv(OUT / "breast_cancer.csv", data.data, data.target)

    data = load_iris()
    keep = data.target >= 1  # versicolor vs virginica, the non-trivial pair
    write_csv(OUT / "iris2.csv", data.data[keep], data.target[keep])

    data = load_wine()
    keep = data.target <= 1
    write_csv(OUT / "wine2.csv", data.data[keep], data.target[keep])


if __name__ == "__main__":
    main()
