import json
from pathlib import Path

import numpy as np
import pytest

from ddrshift.cli import main

DATASETS = Path(__file__).resolve().parent.parent / "datasets"


def run_cli(*argv) -> int:
    return main(list(argv))


@pytest.fixture
def synth_files(tmp_path):
    prefix = str(tmp_path / "toy")
    assert run_cli("synth", "--n-tr", "80", "--n-ts", "120", "--seed", "5", "--out", prefix) == 0
    return Path(prefix + "_train.csv"), Path(prefix + "_test.csv")


class TestSynth:
    def test_writes_both_files_with_label_column(self, synth_files):
        train, test = synth_files
        rows = train.read_text().strip().splitlines()
        assert len(rows) == 80
        assert len(test.read_text().strip().splitlines()) == 120
        labels = {r.split(",")[0] for r in rows}
        assert labels <= {"1", "2"}
        assert len(rows[0].split(",")) == 3

    def test_missing_out_flag_exits_two(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli("synth", "--n-tr", "10")
        assert exc.value.code == 2


class TestRatio:
    def test_weights_csv_one_per_training_row(self, synth_files, tmp_path):
        train, test = synth_files
        out = tmp_path / "w.csv"
        code = run_cli(
            "ratio", "--train", str(train), "--test", str(test),
            "--label-column", "0", "--seed", "3", "--out", str(out),
        )
        assert code == 0
        weights = np.loadtxt(out)
        assert weights.shape == (80,)
        assert weights.min() >= 0.0

    def test_soft_matching_with_conf_file(self, synth_files, tmp_path):
        train, test = synth_files
        conf = tmp_path / "conf.txt"
        conf.write_text("\n".join(["0.5"] * 120) + "\n")
        out_soft, out_hard = tmp_path / "s.csv", tmp_path / "h.csv"
        common = ["--train", str(train), "--test", str(test), "--label-column", "0",
                  "--sigma", "1.5", "--lam", "0.1", "--seed", "3"]
        assert run_cli("ratio", *common, "--conf", str(conf), "--out", str(out_soft)) == 0
        assert run_cli("ratio", *common, "--out", str(out_hard)) == 0
        # constant 0.5 confidences halve the expansion, and clipping keeps 0s
        np.testing.assert_allclose(np.loadtxt(out_soft), 0.5 * np.loadtxt(out_hard), atol=1e-10)

    def test_json_format(self, synth_files, tmp_path):
        train, test = synth_files
        out = tmp_path / "w.json"
        assert run_cli(
            "ratio", "--train", str(train), "--test", str(test), "--label-column", "0",
            "--sigma", "1.0", "--lam", "0.1", "--out", str(out), "--format", "json",
        ) == 0
        payload = json.loads(out.read_text())
        assert payload["sigma"] == 1.0 and len(payload["weights"]) == 80

    def test_missing_file_is_runtime_error(self, tmp_path, capsys):
        code = run_cli("ratio", "--train", "nope.csv", "--test", "nope.csv")
        assert code == 1
        assert "error" in capsys.readouterr().err


class TestDdrCommand:
    def test_json_payload_shape(self, synth_files, tmp_path):
        train, test = synth_files
        out = tmp_path / "ddr.json"
        code = run_cli(
            "ddr", "--train", str(train), "--test", str(test), "--label-column", "0",
            "--test-labeled", "--max-iters", "3", "--seed", "2", "--out", str(out),
        )
        assert code == 0
        payload = json.loads(out.read_text())
        assert len(payload["weights"]) == 80
        assert 1 <= len(payload["trace"]) <= 3
        assert sum(rec["selected"] for rec in payload["trace"]) == 1
        rec = payload["trace"][0]
        assert set(rec) == {"gamma", "mi", "weight_delta", "selected", "warnings"}
        assert payload["selected_iteration"] < len(payload["trace"])

    def test_csv_format_emits_weights_only(self, synth_files, tmp_path):
        train, test = synth_files
        out = tmp_path / "w.csv"
        code = run_cli(
            "ddr", "--train", str(train), "--test", str(test), "--label-column", "0",
            "--test-labeled", "--max-iters", "2", "--seed", "2",
            "--out", str(out), "--format", "csv",
        )
        assert code == 0
        assert np.loadtxt(out).shape == (80,)


class TestExperimentCommand:
    def test_config_file_with_overrides(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "task": "synthetic", "n_tr": 50, "n_ts": 150, "runs": 5,
            "methods": ["unweighted", "ulsif"], "classifier": "gnb", "seed": 0,
        }))
        out = tmp_path / "report.json"
        code = run_cli("experiment", "--config", str(cfg), "--runs", "2", "--out", str(out))
        assert code == 0
        report = json.loads(out.read_text())
        assert report["config"]["runs"] == 2
        assert len(report["accuracies"]["unweighted"]) == 2

    def test_csv_output(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "task": "synthetic", "n_tr": 40, "n_ts": 100, "runs": 2,
            "methods": ["unweighted"], "seed": 1,
        }))
        out = tmp_path / "report.csv"
        assert run_cli("experiment", "--config", str(cfg), "--out", str(out), "--format", "csv") == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "run,unweighted"
        assert lines[-1].startswith("std,")

    def test_bad_config_exits_two(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"task": "synthetic", "methods": ["kmm"]}))
        assert run_cli("experiment", "--config", str(cfg)) == 2
        assert "config error" in capsys.readouterr().err

    def test_missing_config_file_exits_two(self, capsys):
        assert run_cli("experiment", "--config", "missing.json") == 2

    def test_methods_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"task": "synthetic", "n_tr": 40, "n_ts": 100,
                                   "runs": 1, "seed": 0}))
        out = tmp_path / "r.json"
        assert run_cli("experiment", "--config", str(cfg), "--methods", "unweighted",
                       "--out", str(out)) == 0
        assert json.loads(out.read_text())["methods"] == ["unweighted"]


class TestTtest:
    def test_reports_significance(self, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        a.write_text("\n".join(str(0.9 + 0.001 * i) for i in range(10)))
        b.write_text("\n".join(str(0.5 + 0.001 * i) for i in range(10)))
        out = tmp_path / "t.json"
        assert run_cli("ttest", "--a", str(a), "--b", str(b), "--out", str(out)) == 0
        payload = json.loads(out.read_text())
        assert payload["significant"] is True and payload["p_value"] < 1e-6

    def test_identical_samples(self, tmp_path, capsys):
        a = tmp_path / "a.txt"
        a.write_text("0.5\n0.6\n0.7\n")
        assert run_cli("ttest", "--a", str(a), "--b", str(a)) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["significant"] is False and payload["p_value"] == 1.0
