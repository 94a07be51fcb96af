#!/usr/bin/env python3
"""Biased-sampling study on the bundled benchmark CSVs.

For each dataset: normalise to [-1, 1], pick the bias direction with the
widest unweighted-vs-oracle gap among random candidates, then compare the
methods over repeated biased splits. Example:

    python3 scripts/run_biased.py --runs 30 --seed 0
"""

import argparse
from pathlib import Path

from ddrshift.experiments import ExperimentConfig, run_biased

DATASETS = Path(__file__).resolve().parent.parent / "datasets"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--datasets", nargs="+",
                        default=["breast_cancer", "wine2", "iris2"])
    parser.add_argument("--runs", type=int, default=30)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--classifier", choices=("gnb", "wlspc"), default="gnb")
    args = parser.parse_args()

    methods = ("unweighted", "ulsif", "ddr", "oracle-imp")
    header = f"{'dataset':>15} | " + " | ".join(f"{m:>22}" for m in methods) + " | failed"
    print(header)
    print("-" * len(header))
    for name in args.datasets:
        cfg = ExperimentConfig(
            task="biased-csv", data_path=str(DATASETS / f"{name}.csv"), label_column=0,
            runs=args.runs, methods=methods, classifier=args.classifier, seed=args.seed,
        )
        rep = run_biased(cfg)
        cells = []
        for m in methods:
            std = rep.stds[m]
            cells.append(f"{rep.means[m]:.4f} +- {std:.4f}" if std is not None else f"{rep.means[m]:.4f}")
        print(f"{name:>15} | " + " | ".join(f"{c:>22}" for c in cells) + f" | {len(rep.failed_runs)}")


if __name__ == "__main__":
    main()
