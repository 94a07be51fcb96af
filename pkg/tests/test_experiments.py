import json
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import ttest_ind

from ddrshift.experiments import (
    ConfigError,
    ExperimentConfig,
    ExperimentReport,
    run_biased,
    run_experiment,
    run_synthetic,
    welch_t_test,
)

DATASETS = Path(__file__).resolve().parent.parent / "datasets"


class TestWelchTTest:
    def test_identical_samples_not_significant(self):
        a = [0.1, 0.5, 0.9, 0.3]
        significant, p = welch_t_test(a, a)
        assert not significant and p == 1.0

    def test_separated_samples_significant(self):
        a = [0.0, 1e-4, -1e-4, 5e-5]
        b = [1.0, 1.0 + 1e-4, 1.0 - 1e-4, 1.0]
        significant, p = welch_t_test(a, b)
        assert significant and p < 1e-6

    def test_zero_variance_equal_means(self):
        significant, p = welch_t_test([0.5, 0.5, 0.5], [0.5, 0.5])
        assert not significant and p == 1.0

    def test_zero_variance_different_means(self):
        significant, p = welch_t_test([0.0, 0.0], [1.0, 1.0])
        assert significant and p == 0.0

    def test_matches_scipy_reference(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            a = rng.normal(size=rng.integers(3, 12))
            b = rng.normal(0.4, 1.3, size=rng.integers(3, 12))
            _, p = welch_t_test(a, b)
            assert p == pytest.approx(ttest_ind(a, b, equal_var=False).pvalue, abs=1e-12)

    def test_power_against_unit_shift(self):
        # N(0,1) vs N(1,1) with 30 draws each: analytic power is about 0.97,
        # so the rejection rate clears 0.95
        rng = np.random.default_rng(1)
        reps = 2000
        hits = sum(
            welch_t_test(rng.normal(size=30), rng.normal(1.0, 1.0, size=30))[0]
            for _ in range(reps)
        )
        assert hits / reps > 0.95

    def test_needs_two_values_each(self):
        with pytest.raises(ValueError):
            welch_t_test([1.0], [1.0, 2.0])


class TestExperimentConfig:
    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            ExperimentConfig.from_dict({"task": "synthetic", "bogus": 1})

    def test_unknown_method_rejected(self):
        with pytest.raises(ConfigError, match="unknown method"):
            ExperimentConfig(methods=("unweighted", "kmm"))

    def test_oracle_imp_needs_biased_task(self):
        with pytest.raises(ConfigError, match="oracle-imp"):
            ExperimentConfig(task="synthetic", methods=("oracle-imp",))

    def test_biased_task_needs_path(self):
        with pytest.raises(ConfigError, match="data_path"):
            ExperimentConfig(task="biased-csv")

    def test_runs_positive(self):
        with pytest.raises(ConfigError, match="runs"):
            ExperimentConfig(runs=0)

    def test_roundtrip_through_dict(self):
        cfg = ExperimentConfig(task="synthetic", n_tr=50, runs=2, methods=("unweighted",))
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


def small_synth_config(**kw):
    base = dict(
        task="synthetic", n_tr=60, n_ts=200, runs=3,
        methods=("unweighted", "ulsif", "ddr", "oracle-cvtest"),
        classifier="gnb", max_iters=3, seed=0,
    )
    base.update(kw)
    return ExperimentConfig(**base)


class TestRunSynthetic:
    def test_report_structure_and_determinism(self):
        cfg = small_synth_config()
        a, b = run_synthetic(cfg), run_synthetic(cfg)
        assert a.to_json() == b.to_json()
        for m in cfg.methods:
            assert len(a.accuracies[m]) == 3
            assert 0.0 <= a.means[m] <= 1.0
        assert {s["a"] for s in a.significance} <= set(cfg.methods)

    def test_single_run_reports_no_std(self):
        rep = run_synthetic(small_synth_config(runs=1, methods=("unweighted",)))
        assert rep.stds["unweighted"] is None
        assert "std" not in rep.to_csv()

    def test_json_roundtrip_lossless(self):
        rep = run_synthetic(small_synth_config(runs=2, methods=("unweighted", "ulsif")))
        again = ExperimentReport.from_json(rep.to_json())
        assert again.to_dict() == rep.to_dict()
        assert again.accuracies == rep.accuracies

    def test_csv_columns_follow_method_order(self):
        methods = ("ddr", "unweighted")
        rep = run_synthetic(small_synth_config(methods=methods, runs=2))
        header = rep.to_csv().splitlines()[0]
        assert header == "run,ddr,unweighted"

    def test_wrong_task_rejected(self):
        with pytest.raises(ConfigError):
            run_biased(small_synth_config())


class TestRunBiased:
    def test_bundled_dataset_smoke(self):
        cfg = ExperimentConfig(
            task="biased-csv", data_path=str(DATASETS / "wine2.csv"), label_column=0,
            runs=3, methods=("unweighted", "oracle-imp"), classifier="gnb", seed=0,
        )
        rep = run_biased(cfg)
        assert rep.task == "biased-csv"
        for m in cfg.methods:
            assert len(rep.accuracies[m]) + len(rep.failed_runs) == 3
            assert 0.0 <= rep.means[m] <= 1.0

    def test_oracle_weights_come_from_split(self, monkeypatch):
        # the oracle-imp method must consume the stored reciprocals untouched
        import ddrshift.experiments as exp

        seen = {}
        orig = exp._fit_predict

        def spy(X_tr, y_tr, w, X_ts, classifier, seed):
            seen.setdefault("weights", []).append(w)
            return orig(X_tr, y_tr, w, X_ts, classifier, seed)

        monkeypatch.setattr(exp, "_fit_predict", spy)
        cfg = ExperimentConfig(
            task="biased-csv", data_path=str(DATASETS / "iris2.csv"), label_column=0,
            runs=1, methods=("oracle-imp",), classifier="gnb", seed=1,
        )
        rep = run_biased(cfg)
        assert rep.accuracies["oracle-imp"]
        w = seen["weights"][-1]
        assert w.min() >= 1.0  # reciprocals of probabilities in (0, 1)

    def test_ddr_not_much_worse_than_unweighted(self):
        # regression guard on a bundled dataset, paired 30-run comparison
        cfg = ExperimentConfig(
            task="biased-csv", data_path=str(DATASETS / "breast_cancer.csv"), label_column=0,
            runs=30, methods=("unweighted", "ddr"), classifier="gnb", seed=0,
        )
        rep = run_biased(cfg)
        assert rep.means["ddr"] >= rep.means["unweighted"] - 0.01

    def test_degenerate_direction_surfaces_as_config_error(self, tmp_path):
        # constant features admit no biased split along any direction
        p = tmp_path / "flat.csv"
        p.write_text("\n".join("0,1.0,2.0" if i % 2 else "1,1.0,2.0" for i in range(12)) + "\n")
        cfg = ExperimentConfig(
            task="biased-csv", data_path=str(p), label_column=0,
            runs=2, methods=("unweighted",), seed=0, normalize=False,
        )
        with pytest.raises(ConfigError, match="bias direction"):
            run_biased(cfg)

    def test_header_flag_respected(self, tmp_path):
        p = tmp_path / "h.csv"
        p.write_text("label,f1\n" + "\n".join(f"{i % 2},{i}.5" for i in range(40)) + "\n")
        cfg = ExperimentConfig(
            task="biased-csv", data_path=str(p), label_column=0, has_header=True,
            runs=2, methods=("unweighted",), seed=0,
        )
        rep = run_biased(cfg)
        assert len(rep.accuracies["unweighted"]) + len(rep.failed_runs) == 2


class TestRunCustom:
    def test_external_train_test_pair(self, tmp_path):
        rng = np.random.default_rng(0)
        for name, shift in (("train.csv", 0.0), ("test.csv", 0.5)):
            X = rng.normal(shift, 1.0, size=(60, 2))
            y = (X[:, 0] > shift).astype(int)
            lines = [f"{y[i]},{float(X[i, 0])!r},{float(X[i, 1])!r}" for i in range(60)]
            (tmp_path / name).write_text("\n".join(lines) + "\n")
        cfg = ExperimentConfig(
            task="custom", train_path=str(tmp_path / "train.csv"),
            test_path=str(tmp_path / "test.csv"), label_column=0,
            runs=2, methods=("unweighted", "ulsif"), classifier="gnb", seed=0,
        )
        rep = run_experiment(cfg)
        assert set(rep.accuracies) == {"unweighted", "ulsif"}
