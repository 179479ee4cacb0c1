import hashlib
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from glucoread.cli import cli
from glucoread.synth.dataset import load_manifest


@pytest.fixture()
def runner():
    return CliRunner()


def run(runner, *args):
    return runner.invoke(cli, args, catch_exceptions=False)


@pytest.fixture(scope="module")
def tiny_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("data") / "set"
    result = CliRunner().invoke(
        cli, ["synth", "--n", "2", "--seed", "11", "--templates", "4", "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    return out


class TestGroup:
    def test_no_arguments_shows_usage_and_fails(self, runner):
        result = runner.invoke(cli, [])
        assert result.exit_code != 0
        assert "Usage" in result.output

    def test_version(self, runner):
        result = run(runner, "--version")
        assert result.exit_code == 0

    def test_unknown_command(self, runner):
        result = runner.invoke(cli, ["frobnicate"])
        assert result.exit_code == 2


class TestSynth:
    def test_requires_seed(self, runner, tmp_path):
        result = runner.invoke(cli, ["synth", "--out", str(tmp_path / "x")])
        assert result.exit_code == 2

    def test_writes_manifest_and_run_record(self, tiny_dataset):
        records = load_manifest(tiny_dataset / "manifest.jsonl")
        assert len(records) == 2
        run_record = json.loads((tiny_dataset / "run_manifest.json").read_text())
        assert run_record["command"] == "synth"
        assert run_record["seed"] == 11
        assert run_record["artifact_hashes"]

    def test_reruns_are_byte_identical(self, runner, tmp_path):
        digests = []
        for name in ("a", "b"):
            out = tmp_path / name
            result = run(
                runner, "synth", "--n", "3", "--seed", "5", "--templates", "4",
                "--out", str(out),
            )
            assert result.exit_code == 0
            digests.append(
                hashlib.sha256((out / "manifest.jsonl").read_bytes()).hexdigest()
            )
        assert digests[0] == digests[1]

    def test_config_file_supplies_defaults_but_flags_win(self, runner, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n-samples = 4\ntemplate_count = 4\n")
        out_a = tmp_path / "a"
        result = run(
            runner, "--config", str(cfg), "synth", "--seed", "1", "--out", str(out_a)
        )
        assert result.exit_code == 0
        assert len(load_manifest(out_a / "manifest.jsonl")) == 4

        out_b = tmp_path / "b"
        result = run(
            runner, "--config", str(cfg), "synth", "--seed", "1", "--n", "2",
            "--out", str(out_b),
        )
        assert result.exit_code == 0
        assert len(load_manifest(out_b / "manifest.jsonl")) == 2

    def test_bad_config_line_fails(self, runner, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("this is not a key value pair\n")
        result = runner.invoke(cli, ["--config", str(cfg), "synth", "--seed", "1",
                                     "--out", str(tmp_path / "x")])
        assert result.exit_code == 1
        assert "expected" in result.output


class TestRead:
    def test_reads_image_via_loopback(self, runner, tiny_dataset):
        image = sorted((tiny_dataset / "images").glob("*.png"))[0]
        result = run(runner, "read", str(image))
        assert result.exit_code == 0
        path, text, source, degraded = result.output.strip().split("\t")
        assert source in ("ensemble", "mobile_only", "cloud_only")
        assert set(text) <= set("0123456789.")

    def test_missing_target_fails(self, runner):
        result = runner.invoke(cli, ["read", "/nonexistent/file.png"])
        assert result.exit_code == 2


class TestEval:
    def test_reports_accuracy(self, runner, tiny_dataset):
        report = tiny_dataset.parent / "report.txt"
        result = run(
            runner, "eval", "--dataset", str(tiny_dataset),
            "--detectors", "mobile", "--report", str(report),
        )
        assert result.exit_code == 0
        assert "accuracy[mobile]" in result.output
        assert report.exists()

    def test_unknown_detector_is_usage_error(self, runner, tiny_dataset):
        result = runner.invoke(
            cli, ["eval", "--dataset", str(tiny_dataset), "--detectors", "quantum"]
        )
        assert result.exit_code == 2

    def test_missing_manifest_fails(self, runner, tmp_path):
        result = runner.invoke(cli, ["eval", "--dataset", str(tmp_path)])
        assert result.exit_code == 1


class TestSimulate:
    def test_default_table(self, runner):
        result = run(runner, "simulate")
        assert result.exit_code == 0
        for name in ("mobile_only", "cloud_only", "ensemble"):
            assert name in result.output
        assert "✓✓" in result.output and "✗" in result.output

    def test_custom_scenario(self, runner, tmp_path):
        scenario = tmp_path / "scenario.jsonl"
        scenario.write_text(
            json.dumps({"kind": "mobile_only", "local_accuracy": 0.95}) + "\n"
        )
        result = run(runner, "simulate", "--scenario", str(scenario))
        assert result.exit_code == 0
        assert "mobile_only" in result.output
        assert "cloud_only" not in result.output

    def test_bad_scenario_fails(self, runner, tmp_path):
        scenario = tmp_path / "bad.jsonl"
        scenario.write_text('{"kind": "warp_drive"}\n')
        result = runner.invoke(cli, ["simulate", "--scenario", str(scenario)])
        assert result.exit_code == 1


class TestSweepCompression:
    def test_single_size(self, runner, tiny_dataset):
        result = run(
            runner, "sweep-compression", "--dataset", str(tiny_dataset),
            "--sizes", "64x64",
        )
        assert result.exit_code == 0
        assert "64x64" in result.output

    def test_bad_size_token(self, runner, tiny_dataset):
        result = runner.invoke(
            cli, ["sweep-compression", "--dataset", str(tiny_dataset),
                  "--sizes", "banana"]
        )
        assert result.exit_code == 2


class TestCompressDecompress:
    def test_round_trip(self, runner, tiny_dataset, tmp_path):
        image = sorted((tiny_dataset / "images").glob("*.png"))[0]
        payload = tmp_path / "shot.glv"
        restored = tmp_path / "shot.png"
        result = run(runner, "compress", str(image), str(payload),
                     "--width", "64", "--height", "64")
        assert result.exit_code == 0
        assert payload.read_bytes()[:4] == b"GLV1"
        result = run(runner, "decompress", str(payload), str(restored))
        assert result.exit_code == 0
        assert restored.exists()

    def test_decompress_rejects_garbage(self, runner, tmp_path):
        bad = tmp_path / "bad.glv"
        bad.write_bytes(b"not a payload")
        result = runner.invoke(cli, ["decompress", str(bad), str(tmp_path / "o.png")])
        assert result.exit_code == 1
        assert "bad payload" in result.output
