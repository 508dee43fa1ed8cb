"""End-to-end CLI behaviour: stages, exit codes, journal, config precedence."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from vtcurate.cli import main
from vtcurate.fileio import write_matrix, write_pairs
from vtcurate.manifest import read_manifest

STUBS = ["--endpoint-fine", "stub:fine", "--endpoint-sum", "stub:sum",
         "--endpoint-coarse", "stub:coarse"]


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def fx(tmp_path):
    assert run("fixture", "--out", tmp_path / "fx", "--videos", 6,
               "--seed", 7) == 0
    return tmp_path


def run_pipeline(base: Path, out_dir: Path, journal=None):
    g = ["--journal", journal] if journal else []
    fx = base / "fx"
    assert run(*g, "segment", "--manifest", fx / "videos.jsonl",
               "--signatures", fx / "sigs", "--out", out_dir / "m1.jsonl") == 0
    assert run(*g, "caption", "--manifest", out_dir / "m1.jsonl",
               "--out", out_dir / "m2.jsonl", *STUBS) == 0
    assert run(*g, "score", "--manifest", out_dir / "m2.jsonl",
               "--features", fx / "features.jsonl",
               "--out", out_dir / "m3.jsonl") == 0
    assert run(*g, "sample", "--manifest", out_dir / "m3.jsonl",
               "--strategy", "flt", "--n", 4, "--seed", 11,
               "--out", out_dir / "m4.jsonl") == 0
    assert run(*g, "interleave", "--manifest", out_dir / "m4.jsonl",
               "--format", "b", "--drop-prob", 0.3, "--seed", 13,
               "--out", out_dir / "icl.jsonl") == 0
    assert run(*g, "stats", "--manifest", out_dir / "m3.jsonl",
               "--out", out_dir / "report.json") == 0


class TestPipeline:
    def test_stages_produce_valid_manifests(self, fx, tmp_path):
        out = tmp_path / "run"
        run_pipeline(fx, out)
        records = read_manifest(out / "m3.jsonl")
        clips = [r for r in records if hasattr(r, "clip_id")]
        assert clips and all(c.scores is not None for c in clips)
        assert all(c.caption for c in clips)
        report = json.loads((out / "report.json").read_text())
        assert report["clips"] == len(clips)
        assert len((out / "icl.jsonl").read_text().splitlines()) >= 1

    def test_byte_identical_reruns(self, fx, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run_pipeline(fx, a)
        run_pipeline(fx, b)
        for name in ("m1.jsonl", "m2.jsonl", "m3.jsonl", "m4.jsonl",
                     "icl.jsonl", "report.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_journal_skips_completed_stage(self, fx, tmp_path):
        out = tmp_path / "run"
        journal = tmp_path / "journal.jsonl"
        fxd = fx / "fx"
        for _ in range(2):
            assert run("--journal", journal, "segment",
                       "--manifest", fxd / "videos.jsonl",
                       "--signatures", fxd / "sigs",
                       "--out", out / "m1.jsonl") == 0
        entries = [json.loads(l) for l in journal.read_text().splitlines()]
        assert [e["status"] for e in entries] == ["ok", "skipped"]
        assert entries[0]["output_hash"] == entries[1]["output_hash"]

    def test_stats_text_rendering(self, fx, tmp_path):
        out = tmp_path / "run"
        fxd = fx / "fx"
        assert run("segment", "--manifest", fxd / "videos.jsonl",
                   "--signatures", fxd / "sigs", "--out", out / "m1.jsonl") == 0
        assert run("stats", "--manifest", out / "m1.jsonl",
                   "--out", out / "report.txt") == 0
        assert "corpus report" in (out / "report.txt").read_text()


class TestExitCodes:
    def test_segment_rejects_clip_manifest(self, fx, tmp_path):
        out = tmp_path / "run"
        fxd = fx / "fx"
        run_pipeline(fx, out)
        code = run("segment", "--manifest", out / "m1.jsonl",
                   "--signatures", fxd / "sigs", "--out", out / "bad.jsonl")
        assert code == 2
        assert not (out / "bad.jsonl").exists()

    def test_missing_input_is_validation_failure(self, tmp_path):
        code = run("stats", "--manifest", tmp_path / "nope.jsonl",
                   "--out", tmp_path / "r.json")
        assert code == 2

    def test_service_failure_exit_code(self, fx, tmp_path):
        out = tmp_path / "run"
        fxd = fx / "fx"
        assert run("segment", "--manifest", fxd / "videos.jsonl",
                   "--signatures", fxd / "sigs", "--out", out / "m1.jsonl") == 0
        code = run("caption", "--manifest", out / "m1.jsonl",
                   "--out", out / "m2.jsonl",
                   "--endpoint-fine", "http://127.0.0.1:1/nope",
                   "--endpoint-sum", "stub:sum",
                   "--endpoint-coarse", "stub:coarse",
                   "--max-retries", 0, "--timeout-ms", 200)
        assert code == 3
        assert not (out / "m2.jsonl").exists()

    def test_bad_flag_is_config_error(self, tmp_path):
        assert run("segment", "--no-such-flag") == 4

    def test_invalid_threshold_is_config_error(self, fx, tmp_path):
        fxd = fx / "fx"
        code = run("segment", "--manifest", fxd / "videos.jsonl",
                   "--signatures", fxd / "sigs",
                   "--out", tmp_path / "x.jsonl",
                   "--cut-threshold", 300.0)
        assert code == 4


class TestConfigPrecedence:
    def test_file_env_flag_order(self, fx, tmp_path, monkeypatch):
        fxd = fx / "fx"
        cfg = tmp_path / "pipeline.ini"
        cfg.write_text("[segment]\ncut_threshold = 300.0\n")
        args = ("segment", "--manifest", fxd / "videos.jsonl",
                "--signatures", fxd / "sigs", "--out", tmp_path / "m.jsonl")
        # file alone: invalid threshold -> config error
        assert run("--config", cfg, *args) == 4
        # env overrides file
        monkeypatch.setenv("VTCURATE_SEGMENT_CUT_THRESHOLD", "27.0")
        assert run("--config", cfg, *args) == 0
        # flag overrides env
        monkeypatch.setenv("VTCURATE_SEGMENT_CUT_THRESHOLD", "301.0")
        assert run("--config", cfg, *args, "--cut-threshold", "27.0") == 0

    def test_missing_config_file(self, tmp_path):
        assert run("--config", tmp_path / "absent.ini", "stats",
                   "--manifest", "x", "--out", "y") == 4


class TestNumericsCommands:
    def test_align_train_and_output(self, tmp_path):
        rng = np.random.default_rng(0)
        v = rng.normal(size=(16, 8))
        t = v + 0.05 * rng.normal(size=(16, 8))
        pairs = tmp_path / "pairs.txt"
        write_pairs(pairs, v, t)
        out = tmp_path / "train.json"
        assert run("align-train", "--pairs", pairs, "--steps", 50,
                   "--lr", 0.05, "--seed", 3, "--proj-dim", 64,
                   "--out", out) == 0
        payload = json.loads(out.read_text())
        assert len(payload["loss_curve"]) == 51
        assert payload["final_loss"] < payload["initial_loss"]

    def test_eval_r_at_1(self, tmp_path, capsys):
        sim = tmp_path / "sim.txt"
        write_matrix(sim, [[0.9, 0.1], [0.8, 0.2]])
        assert run("eval", "--sim", sim, "--metric", "r@k", "--k", 1) == 0
        assert capsys.readouterr().out.strip() == "0.5"

    def test_eval_with_labels(self, tmp_path, capsys):
        sim = tmp_path / "sim.txt"
        write_matrix(sim, [[0.1, 0.9], [0.8, 0.2]])
        labels = tmp_path / "labels.txt"
        labels.write_text("1\n0\n")
        assert run("eval", "--sim", sim, "--metric", "topk", "--k", 1,
                   "--labels", labels) == 0
        assert capsys.readouterr().out.strip() == "1.0"
