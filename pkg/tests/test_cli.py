import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from malvis.cli import EXIT_CONFIG, EXIT_DIVERGED, EXIT_MISSING, build_parser, image_grid, main
from malvis.config import ConfigError, PipelineConfig, load_config
from malvis.prs import read_image

DATA = Path(__file__).parent / "data"
SMOKE = Path(__file__).parent.parent / "configs" / "smoke.yaml"


def test_encode_worked_example_matches_golden(tmp_path):
    assert main(["encode", str(DATA / "worked_example.csv"), "--out-dir", str(tmp_path)]) == 0
    out = tmp_path / "encoded" / "sample_00001_1.pgm"
    assert out.read_bytes() == (DATA / "worked_example.pgm").read_bytes()


def test_encode_missing_input(tmp_path):
    assert main(["encode", str(tmp_path / "nope.csv"), "--out-dir", str(tmp_path)]) == EXIT_MISSING


def test_stage_without_prerequisite(tmp_path):
    assert main(["smote", "--out-dir", str(tmp_path)]) == EXIT_MISSING
    assert main(["compare", "--out-dir", str(tmp_path)]) == EXIT_MISSING
    assert main(["train-cnn", "--arm", "b", "--out-dir", str(tmp_path)]) == EXIT_MISSING


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("cnn:\n  epochs: 0\n")
    assert main(["synth", "--config", str(bad), "--out-dir", str(tmp_path)]) == EXIT_CONFIG
    bad.write_text("cnn:\n  epoch: 3\n")
    assert main(["synth", "--config", str(bad), "--out-dir", str(tmp_path)]) == EXIT_CONFIG
    bad.write_text("paths:\n  train: data/x.csv\n  test: data/x.csv\n")
    assert main(["synth", "--config", str(bad), "--out-dir", str(tmp_path)]) == EXIT_CONFIG
    assert main(["synth", "--config", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG
    assert main(["synth", "--set", "novalue", "--out-dir", str(tmp_path)]) == EXIT_CONFIG


def test_flags_override_file(tmp_path):
    cfg = load_config(SMOKE, {"seed": 11, "cnn.epochs": 4})
    assert cfg.seed == 11 and cfg.cnn.epochs == 4
    assert cfg.synth.n_benign == 70  # untouched file value
    assert cfg.seeded().cnn.rng_seed == cfg.stage_seeds()["cnn"]


def test_default_config_is_valid():
    cfg = PipelineConfig()
    assert cfg.synth.n_benign - cfg.test_per_class == 3000
    assert cfg.synth.n_malign - cfg.test_per_class == 1465
    assert len(cfg.digest()) == 64
    with pytest.raises(ConfigError):
        load_config(None, {"test_per_class": -1})


def test_stages_and_diverged_exit(tmp_path):
    base = ["--config", str(SMOKE), "--out-dir", str(tmp_path)]
    assert main(["synth", *base]) == 0
    assert main(["train-cgan", *base, "--set", "cgan.d_learning_rate=1e300"]) == EXIT_DIVERGED
    assert (tmp_path / "reports" / "gan_trace.csv").exists()


def test_image_grid():
    ink = np.ones((3, 4, 4), dtype=bool)
    grid = image_grid(ink, cols=2, gap=1)
    assert grid.side == 2 * 4 + 3
    assert grid.black_count() == 3 * 16


@pytest.fixture(scope="module")
def smoke_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("runs")
    outs = []
    for name in ("one", "two"):
        out = root / name
        assert main(["run-all", "--config", str(SMOKE), "--out-dir", str(out)]) == 0
        outs.append(out)
    yield outs
    shutil.rmtree(root)


def test_run_all_outputs(smoke_runs):
    out = smoke_runs[0]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["test_set_sha256"]["a"] == manifest["test_set_sha256"]["b"]
    assert manifest["seed"] == 7
    for name in ("report_a.json", "report_b.json", "comparison.txt", "gan_trace.csv",
                 "confusion_a.csv"):
        assert (out / "reports" / name).exists()
    for name in ("grid_benign.pgm", "grid_malign.pgm", "grid_generated.pgm"):
        read_image(out / "images" / name)
    # default generated count balances the training set
    n_gen = len(list((out / "images" / "generated").glob("*.pgm")))
    assert n_gen == manifest["stages"]["generate"]["n_generated"] == 60 - 30


def test_run_all_is_byte_identical(smoke_runs):
    a, b = smoke_runs
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    assert files == sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    for rel in files:
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel


def test_stage_rerun_is_idempotent(smoke_runs, tmp_path):
    src = smoke_runs[0]
    shutil.copytree(src, tmp_path / "w")
    before = (tmp_path / "w" / "data" / "train_smote.csv").read_bytes()
    assert main(["smote", "--config", str(SMOKE), "--out-dir", str(tmp_path / "w")]) == 0
    assert (tmp_path / "w" / "data" / "train_smote.csv").read_bytes() == before
    assert main(["evaluate", "--arm", "a", "--config", str(SMOKE),
                 "--out-dir", str(tmp_path / "w")]) == 0
    assert (tmp_path / "w" / "reports" / "report_a.json").read_bytes() == \
        (src / "reports" / "report_a.json").read_bytes()


def test_global_flags_before_or_after_command(tmp_path):
    p = build_parser()
    a = p.parse_args(["--config", "c.yaml", "--set", "seed=1", "synth", "--set", "cv=true"])
    assert a.config == "c.yaml" and a.set + a.set_late == ["seed=1", "cv=true"]
    b = p.parse_args(["synth", "--out-dir", str(tmp_path), "--seed", "4"])
    assert b.out_dir == str(tmp_path) and b.seed == 4
