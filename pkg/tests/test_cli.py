"""
End-to-end tests of the hct command line through click's CliRunner
"""
import json
import shutil

import pytest
from click.testing import CliRunner

from hct_sod.commands.common import (
    EXIT_CHECKPOINT,
    EXIT_DATASET,
    EXIT_GRADCHECK,
    EXIT_OK,
    EXIT_USAGE,
)
from hct_sod.main import cli

SMALL = ["--set", "image_size=32"]


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def dataset(runner, tmp_path):
    root = tmp_path / "data"
    result = runner.invoke(cli, ["synth", str(root), "--seed", "2", "--n", "3", "--size", "32"])
    assert result.exit_code == EXIT_OK, result.output
    return root


@pytest.fixture
def checkpoint(runner, tmp_path):
    out = tmp_path / "trained"
    result = runner.invoke(cli, ["train", *SMALL, "--epochs", "1", "--n", "2", "--batch", "2", "--out", str(out)])
    assert result.exit_code == EXIT_OK, result.output
    return out / "checkpoint.hct"


class TestSynth:
    def test_writes_dataset(self, dataset):
        assert (dataset / "index.txt").read_text().split() == ["s00000", "s00001", "s00002"]
        assert (dataset / "s00001_rgb.ppm").is_file()

    def test_size_must_be_multiple_of_16(self, runner, tmp_path):
        result = runner.invoke(cli, ["synth", str(tmp_path / "d"), "--size", "40"])
        assert result.exit_code == EXIT_USAGE


class TestTrain:
    def test_logs_and_checkpoint(self, runner, tmp_path):
        out = tmp_path / "run"
        result = runner.invoke(cli, ["train", *SMALL, "--epochs", "1", "--n", "4", "--batch", "2", "--out", str(out)])
        assert result.exit_code == EXIT_OK, result.output
        assert "trained 2 steps" in result.output
        lines = (out / "loss_log.tsv").read_text().splitlines()
        assert lines[0].startswith("step\tlr\t")
        assert len(lines) == 3
        assert len((out / "epochs.jsonl").read_text().splitlines()) == 1
        assert "image_size = 32" in (out / "config.txt").read_text()
        assert (out / "checkpoint.hct").read_bytes()[:4] == b"HCT1"

    def test_deterministic(self, runner, tmp_path):
        args = ["train", *SMALL, "--epochs", "1", "--n", "2", "--batch", "1", "--seed", "5"]
        for name in ("a", "b"):
            result = runner.invoke(cli, [*args, "--out", str(tmp_path / name)])
            assert result.exit_code == EXIT_OK, result.output
        assert (tmp_path / "a" / "checkpoint.hct").read_bytes() == (tmp_path / "b" / "checkpoint.hct").read_bytes()
        assert (tmp_path / "a" / "loss_log.tsv").read_text() == (tmp_path / "b" / "loss_log.tsv").read_text()

    def test_config_file(self, runner, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("image_size = 32\nepochs = 1\nn_samples = 1\nbatch_size = 1\nradius = 0\n")
        result = runner.invoke(cli, ["train", "--config", str(cfg), "--out", str(tmp_path / "run")])
        assert result.exit_code == EXIT_OK, result.output
        assert "radius = 0" in (tmp_path / "run" / "config.txt").read_text()

    def test_on_dataset_directory(self, runner, tmp_path, dataset):
        out = tmp_path / "run"
        result = runner.invoke(cli, ["train", *SMALL, "--epochs", "1", "--batch", "3",
                                     "--data", str(dataset), "--out", str(out)])
        assert result.exit_code == EXIT_OK, result.output
        assert "trained 1 steps" in result.output

    def test_default_output_directory(self, runner, tmp_path):
        result = runner.invoke(cli, ["train", *SMALL, "--epochs", "1", "--n", "1", "--batch", "1"])
        assert result.exit_code == EXIT_OK, result.output
        assert (tmp_path / "runs" / "train" / "checkpoint.hct").is_file()

    def test_unknown_config_key(self, runner, tmp_path):
        result = runner.invoke(cli, ["train", "--set", "learning_rate=1", "--out", str(tmp_path / "x")])
        assert result.exit_code == EXIT_USAGE
        assert "error: ConfigError" in result.output

    def test_invalid_config_value(self, runner, tmp_path):
        result = runner.invoke(cli, ["train", "--set", "radius=-2", "--out", str(tmp_path / "x")])
        assert result.exit_code == EXIT_USAGE

    def test_unknown_flag(self, runner):
        assert runner.invoke(cli, ["train", "--no-such-flag"]).exit_code == EXIT_USAGE

    def test_dataset_without_index(self, runner, tmp_path):
        (tmp_path / "empty").mkdir()
        result = runner.invoke(cli, ["train", *SMALL, "--data", str(tmp_path / "empty"), "--out", str(tmp_path / "x")])
        assert result.exit_code == EXIT_DATASET

    def test_dataset_of_wrong_size(self, runner, tmp_path, dataset):
        result = runner.invoke(cli, ["train", "--data", str(dataset), "--out", str(tmp_path / "x")])
        assert result.exit_code == EXIT_DATASET


class TestEval:
    def test_groundtruth_as_predictions_scores_perfectly(self, runner, tmp_path, dataset):
        preds = tmp_path / "preds"
        preds.mkdir()
        for sample_id in ("s00000", "s00001", "s00002"):
            shutil.copy(dataset / f"{sample_id}_gt.pgm", preds / f"{sample_id}_pred.pgm")
        out = tmp_path / "report"
        result = runner.invoke(cli, ["eval", "--data", str(dataset), "--pred-dir", str(preds), "--out", str(out)])
        assert result.exit_code == EXIT_OK, result.output
        assert "MAE=0.000000 maxF=1.000000 S=1.000000 Emax=1.000000" in result.output
        records = [json.loads(line) for line in (out / "metrics.jsonl").read_text().splitlines()]
        assert [r["id"] for r in records] == ["s00000", "s00001", "s00002"]
        assert all(r["mae"] == 0.0 and r["maxF"] == 1.0 for r in records)
        assert (out / "summary.txt").is_file()

    def test_with_checkpoint(self, runner, tmp_path, dataset, checkpoint):
        out = tmp_path / "report"
        result = runner.invoke(cli, ["eval", "--data", str(dataset), "--checkpoint", str(checkpoint),
                                     "--out", str(out), "--workers", "2", "--thresholds", "32"])
        assert result.exit_code == EXIT_OK, result.output
        assert len((out / "metrics.jsonl").read_text().splitlines()) == 3

    def test_needs_exactly_one_source(self, runner, tmp_path, dataset, checkpoint):
        both = ["eval", "--data", str(dataset), "--checkpoint", str(checkpoint), "--pred-dir", str(dataset)]
        assert runner.invoke(cli, both).exit_code == EXIT_USAGE
        assert runner.invoke(cli, ["eval", "--data", str(dataset)]).exit_code == EXIT_USAGE

    def test_missing_prediction(self, runner, tmp_path, dataset):
        (tmp_path / "preds").mkdir()
        result = runner.invoke(cli, ["eval", "--data", str(dataset), "--pred-dir", str(tmp_path / "preds")])
        assert result.exit_code == EXIT_DATASET


class TestPredict:
    def test_writes_maps(self, runner, tmp_path, dataset, checkpoint):
        out = tmp_path / "preds"
        result = runner.invoke(cli, ["predict", "--checkpoint", str(checkpoint), "--data", str(dataset),
                                     "--out", str(out)])
        assert result.exit_code == EXIT_OK, result.output
        assert sorted(p.name for p in out.iterdir()) == ["s00000_pred.pgm", "s00001_pred.pgm", "s00002_pred.pgm"]

    def test_corrupt_checkpoint(self, runner, tmp_path, dataset):
        bad = tmp_path / "bad.hct"
        bad.write_bytes(b"definitely not a checkpoint")
        result = runner.invoke(cli, ["predict", "--checkpoint", str(bad), "--data", str(dataset)])
        assert result.exit_code == EXIT_CHECKPOINT
        assert "error: CheckpointFormatError" in result.output

    def test_truncated_checkpoint(self, runner, tmp_path, dataset, checkpoint):
        short = tmp_path / "short.hct"
        short.write_bytes(checkpoint.read_bytes()[:-16])
        result = runner.invoke(cli, ["predict", "--checkpoint", str(short), "--data", str(dataset)])
        assert result.exit_code == EXIT_CHECKPOINT


class TestGradcheck:
    def test_passes(self, runner, tmp_path):
        report = tmp_path / "grad.json"
        result = runner.invoke(cli, ["gradcheck", "--seed", "1", "--size", "32", "--entries", "2",
                                     "--report", str(report)])
        assert result.exit_code == EXIT_OK, result.output
        assert "gradcheck passed" in result.output
        data = json.loads(report.read_text())
        assert data["entries"] and all(e["passed"] for e in data["entries"])

    def test_impossible_tolerance_fails(self, runner):
        result = runner.invoke(cli, ["gradcheck", "--size", "32", "--entries", "1",
                                     "--tolerance", "1e-30", "--abs-floor", "0"])
        assert result.exit_code == EXIT_GRADCHECK
        assert "FAIL" in result.output


class TestOracle:
    def test_all_ok(self, runner):
        result = runner.invoke(cli, ["oracle", "--seed", "3"])
        assert result.exit_code == EXIT_OK, result.output
        assert "FAIL" not in result.output
        assert "lca_restricted_softmax" in result.output


class TestDumpAttention:
    def test_fresh_model_on_synthetic_sample(self, runner, tmp_path):
        out = tmp_path / "attn"
        result = runner.invoke(cli, ["dump-attn", "--patch", "0", "--out", str(out)])
        assert result.exit_code == EXIT_OK, result.output
        assert (out / "lca_r_patch0.pgm").is_file()
        assert (out / "final.pgm").is_file()

    def test_checkpoint_on_dataset(self, runner, tmp_path, dataset, checkpoint):
        out = tmp_path / "attn"
        result = runner.invoke(cli, ["dump-attn", "--checkpoint", str(checkpoint), "--data", str(dataset),
                                     "--index", "2", "--out", str(out)])
        assert result.exit_code == EXIT_OK, result.output
        assert "s00002" in result.output

    def test_index_past_dataset(self, runner, dataset, checkpoint):
        result = runner.invoke(cli, ["dump-attn", "--checkpoint", str(checkpoint), "--data", str(dataset),
                                     "--index", "9"])
        assert result.exit_code == EXIT_USAGE


class TestVersion:
    def test_version(self, runner):
        result = runner.invoke(cli, ["--version"])
        assert result.exit_code == EXIT_OK
        assert result.output.startswith("hct, version")
