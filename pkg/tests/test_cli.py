"""Config validation and the command-line workflow, run in-process."""

import json
import subprocess
import sys

import numpy as np
import pytest

from qrnn import cli
from qrnn.data import load_series_csv
from qrnn.experiments import ConfigError, parse_config

TINY_MODEL = {"data_qubits": 1, "history_qubits": 1, "entangler": "NN", "entangler_rounds": 1}
TINY_DATA = {"source": "synth", "length": 40, "window": 2, "n_train": 20, "seed": 3}


def write_config(tmp_path, name="config.json", **sections):
    path = tmp_path / name
    path.write_text(json.dumps(sections))
    return path


def run_cli(args):
    return cli.main([str(a) for a in args])


class TestConfigValidation:
    def test_unknown_top_level_key_names_path(self):
        with pytest.raises(ConfigError, match="config.extra: unknown key"):
            parse_config({"model": TINY_MODEL, "extra": 1}, need=())

    def test_unknown_section_keys_name_full_path(self):
        with pytest.raises(ConfigError, match="model.foo: unknown key"):
            parse_config({"model": {**TINY_MODEL, "foo": 1}}, need=())
        with pytest.raises(ConfigError, match="data.bar: unknown key"):
            parse_config({"data": {**TINY_DATA, "bar": 1}}, need=())
        with pytest.raises(ConfigError, match="train.baz: unknown key"):
            parse_config({"train": {"epochs": 1, "baz": 1}}, need=())
        with pytest.raises(ConfigError, match="output.x: unknown key"):
            parse_config({"output": {"x": 1}}, need=())

    def test_missing_required_section(self):
        with pytest.raises(ConfigError, match="config.train: required"):
            parse_config({"model": TINY_MODEL, "data": TINY_DATA}, need=("model", "data", "train"))

    def test_missing_required_field(self):
        with pytest.raises(ConfigError, match="train.epochs: required"):
            parse_config({"train": {}}, need=("train",))

    def test_type_errors_name_field(self):
        with pytest.raises(ConfigError, match="train.epochs: expected int"):
            parse_config({"train": {"epochs": "many"}}, need=())
        with pytest.raises(ConfigError, match="expected int, got bool"):
            parse_config({"train": {"epochs": True}}, need=())
        with pytest.raises(ConfigError, match="data.length: must be positive"):
            parse_config({"data": {**TINY_DATA, "length": -5}}, need=())

    def test_model_semantic_errors_wrapped(self):
        with pytest.raises(ConfigError, match="model: .*even qubit count"):
            parse_config({"model": {"data_qubits": 2, "history_qubits": 1}}, need=())
        with pytest.raises(ConfigError, match="model: .*staggered"):
            parse_config(
                {"model": {**TINY_MODEL, "data_qubits": 2, "kind": "staggered"}}, need=()
            )

    def test_unknown_data_source(self):
        with pytest.raises(ConfigError, match="data.source: unknown source"):
            parse_config({"data": {**TINY_DATA, "source": "parquet"}}, need=())

    def test_csv_source_needs_path_and_column(self):
        with pytest.raises(ConfigError, match="csv source needs both"):
            parse_config({"data": {"source": "csv"}}, need=())

    def test_overrides_apply(self):
        cfg = parse_config(
            {"train": {"epochs": 2, "seed": 1}, "output": {"dir": "a"}},
            need=("train",), seed_override=9, workers_override=3, out_override="b",
        )
        assert cfg.train.seed == 9
        assert cfg.train.workers == 3
        assert str(cfg.out_dir) == "b"

    def test_task_classification_iff_mc_source(self):
        reg = parse_config({"data": TINY_DATA}, need=())
        mc = parse_config({"data": {"source": "mc_synth"}}, need=())
        assert reg.task == "regression"
        assert mc.task == "classification"


class TestCliExitCodes:
    def test_missing_config_flag_is_a_config_error(self, capsys):
        assert run_cli(["train"]) == 1
        assert "config error" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        assert run_cli(["train", "--config", tmp_path / "nope.json"]) == 1
        assert "not found" in capsys.readouterr().err

    def test_invalid_json_config(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert run_cli(["synth", "--config", path]) == 1
        assert "not valid JSON" in capsys.readouterr().err

    def test_runtime_failures_exit_2(self, tmp_path, capsys):
        csv_path = tmp_path / "series.csv"
        csv_path.write_text("index,load\n0,1.0\n1,oops\n")
        config = write_config(
            tmp_path,
            data={"source": "csv", "path": str(csv_path), "column": "load",
                  "window": 2, "n_train": 2},
        )
        assert run_cli(["synth", "--config", config, "--out", tmp_path / "out"]) == 2
        assert "row 3" in capsys.readouterr().err


class TestSynthCommand:
    def test_writes_series_csv(self, tmp_path, capsys):
        config = write_config(tmp_path, data=TINY_DATA)
        assert run_cli(["synth", "--config", config, "--out", tmp_path / "out"]) == 0
        report = json.loads(capsys.readouterr().out)
        series = load_series_csv(tmp_path / "out" / "series.csv", "sine_noise")
        assert len(series) == 40
        assert report["length"] == 40

    def test_writes_classification_corpus(self, tmp_path, capsys):
        config = write_config(tmp_path, data={"source": "mc_synth", "seed": 11})
        assert run_cli(["synth", "--config", config, "--out", tmp_path / "out"]) == 0
        report = json.loads(capsys.readouterr().out)
        corpus = json.loads((tmp_path / "out" / "corpus.json").read_text())
        assert len(corpus["sentences"]) == 130 == report["sentences"]
        assert len(corpus["vocab"]) == 17


class TestInspectCommand:
    def test_prints_header_and_gates(self, tmp_path, capsys):
        config = write_config(tmp_path, model={"data_qubits": 3, "history_qubits": 3})
        assert run_cli(["inspect", "--config", config]) == 0
        out = capsys.readouterr().out
        assert "plain model: data=3 history=3 qubits=6" in out
        assert "30 trainable parameters" in out
        assert out.count("rzz") == 12
        assert out.count("rx") == 12
        assert out.count("rz ") == 6


class TestGradCheckCommand:
    def test_default_model_agrees(self, capsys):
        assert run_cli(["grad-check"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["ok"] is True
        assert report["max_deviation"] <= report["tolerance"] == 1e-6


class TestTrainEvalPredict:
    def make_train_config(self, tmp_path, out="run", **train_extra):
        return write_config(
            tmp_path,
            name=f"train-{out}.json",
            model=TINY_MODEL,
            data=TINY_DATA,
            train={"epochs": 2, "learning_rate": 0.05, "seed": 5, **train_extra},
            output={"dir": str(tmp_path / out)},
        )

    def test_train_writes_artifacts(self, tmp_path, capsys):
        config = self.make_train_config(tmp_path)
        assert run_cli(["train", "--config", config]) == 0
        out_dir = tmp_path / "run"
        metrics = json.loads((out_dir / "metrics.json").read_text())
        history = json.loads((out_dir / "history.json").read_text())
        checkpoint = json.loads((out_dir / "checkpoint.json").read_text())
        assert metrics["command"] == "train"
        assert metrics["model"]["n_params"] == 7
        assert metrics["n_samples"] == {"train": 20, "test": 18}
        assert len(history["losses"]) == 2
        assert len(checkpoint["params"]) == 7
        assert checkpoint["epoch"] == 1
        printed = json.loads(capsys.readouterr().out)
        assert printed["loss_final"] == metrics["loss_final"]

    def test_seeded_runs_reproduce_metrics_exactly(self, tmp_path, capsys):
        config_a = self.make_train_config(tmp_path, out="a")
        config_b = self.make_train_config(tmp_path, out="b")
        assert run_cli(["train", "--config", config_a]) == 0
        assert run_cli(["train", "--config", config_b]) == 0
        capsys.readouterr()
        read = lambda p: json.loads((tmp_path / p / "metrics.json").read_text())
        ma, mb = read("a"), read("b")
        ma.pop("generated_at")
        mb.pop("generated_at")
        assert ma == mb
        pa = json.loads((tmp_path / "a" / "checkpoint.json").read_text())["params"]
        pb = json.loads((tmp_path / "b" / "checkpoint.json").read_text())["params"]
        assert pa == pb

    def test_seed_override_changes_the_run(self, tmp_path, capsys):
        config_a = self.make_train_config(tmp_path, out="a")
        config_b = self.make_train_config(tmp_path, out="b")
        assert run_cli(["train", "--config", config_a]) == 0
        assert run_cli(["train", "--config", config_b, "--seed", 6]) == 0
        capsys.readouterr()
        pa = json.loads((tmp_path / "a" / "checkpoint.json").read_text())["params"]
        pb = json.loads((tmp_path / "b" / "checkpoint.json").read_text())["params"]
        assert pa != pb

    def test_eval_after_train(self, tmp_path, capsys):
        config = self.make_train_config(tmp_path)
        assert run_cli(["train", "--config", config]) == 0
        assert run_cli(["eval", "--config", config]) == 0
        out_dir = tmp_path / "run"
        assert (out_dir / "predictions.csv").exists()
        assert (out_dir / "predictions.svg").exists()
        capsys.readouterr()
        metrics = json.loads((out_dir / "metrics.json").read_text())
        assert metrics["command"] == "eval"
        assert "test" in metrics["accuracy_percent"]
        svg = (out_dir / "predictions.svg").read_text()
        assert svg.count("<polyline") == 2

    def test_eval_without_checkpoint_fails_cleanly(self, tmp_path, capsys):
        config = self.make_train_config(tmp_path, out="fresh")
        assert run_cli(["eval", "--config", config]) == 1
        assert "train first" in capsys.readouterr().err

    def test_checkpoint_shape_mismatch_rejected(self, tmp_path, capsys):
        config = self.make_train_config(tmp_path)
        assert run_cli(["train", "--config", config]) == 0
        wide = write_config(
            tmp_path, name="wide.json",
            model={"data_qubits": 2, "history_qubits": 2},
            data=TINY_DATA,
            output={"dir": str(tmp_path / "run")},
        )
        assert run_cli(["eval", "--config", wide]) == 1
        assert "holds 7 parameters, model needs 20" in capsys.readouterr().err

    def test_predict_forecasts_from_window(self, tmp_path, capsys):
        config = self.make_train_config(tmp_path)
        assert run_cli(["train", "--config", config]) == 0
        capsys.readouterr()
        assert run_cli(["predict", "--config", config, "--values", "9.8,10.2"]) == 0
        result = json.loads(capsys.readouterr().out)
        assert 0.0 <= result["readout_probability"] <= 1.0
        assert 8.0 < result["forecast"] < 12.0

    def test_predict_validates_window_length(self, tmp_path, capsys):
        config = self.make_train_config(tmp_path)
        assert run_cli(["train", "--config", config]) == 0
        capsys.readouterr()
        assert run_cli(["predict", "--config", config, "--values", "1,2,3"]) == 1
        assert "expected 2 values" in capsys.readouterr().err

    def test_predict_rejects_unparsable_values(self, tmp_path, capsys):
        config = self.make_train_config(tmp_path)
        assert run_cli(["predict", "--config", config, "--values", "a,b"]) == 1
        assert "could not parse" in capsys.readouterr().err

    def test_classification_train_reports_class_accuracy(self, tmp_path, capsys):
        config = write_config(
            tmp_path,
            model=TINY_MODEL,
            data={"source": "mc_synth", "seed": 11, "n_train": 100},
            train={"epochs": 1, "learning_rate": 0.01, "seed": 0},
            output={"dir": str(tmp_path / "mc")},
        )
        assert run_cli(["train", "--config", config]) == 0
        metrics = json.loads(capsys.readouterr().out)
        assert metrics["dataset"]["task"] == "classification"
        assert metrics["n_samples"] == {"train": 100, "test": 30}
        assert 0.0 <= metrics["accuracy_percent"]["test"] <= 100.0


class TestProcessBoundary:
    def test_module_entry_point_runs(self, tmp_path):
        config = tmp_path / "c.json"
        config.write_text(json.dumps({"data": TINY_DATA}))
        proc = subprocess.run(
            [sys.executable, "-m", "qrnn.cli", "synth", "--config", str(config),
             "--out", str(tmp_path / "out")],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "out" / "series.csv").exists()
