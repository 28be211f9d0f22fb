"""Config validation, stage orchestration, and the command-line surface."""

import json

import numpy as np
import pytest

from brainvis_forge.pipeline.checkpoint import StageError
from brainvis_forge.pipeline.cli import main
from brainvis_forge.pipeline.config import PipelineConfig
from brainvis_forge.pipeline.runner import RunPaths, run_gen_data, run_train_lmm

TINY = "configs/tiny.json"


def tiny_config(**overrides) -> PipelineConfig:
    return PipelineConfig.load(TINY).with_overrides(**overrides)


# --- config --------------------------------------------------------------------


def test_default_config_carries_reference_values():
    cfg = PipelineConfig()
    assert (cfg.c, cfg.l, cfg.n, cfg.d) == (128, 440, 110, 1024)
    assert (cfg.r_m, cfg.n_t, cfg.heads, cfg.ffn) == (0.75, 660, 16, 4096)
    assert (cfg.sa_blocks, cfg.ca_blocks, cfg.lstm_hidden) == (8, 4, 128)
    assert (cfg.lr, cfg.batch, cfg.e, cfg.T, cfg.rho) == (0.001, 128, 768, 100, 0.3)
    assert cfg.epochs == {"lmm": 300, "freq": 900, "time_ft": 80, "joint_ft": 30, "align": 200}
    assert cfg.unit_dim == 512


def test_config_rejects_bad_fields():
    with pytest.raises(ValueError, match="must divide"):
        PipelineConfig(n=7)
    with pytest.raises(ValueError, match="heads"):
        PipelineConfig(heads=7)
    with pytest.raises(ValueError, match="r_m"):
        PipelineConfig(r_m=1.2)
    with pytest.raises(ValueError, match="unknown config keys"):
        PipelineConfig.from_dict({"not_a_field": 1})
    with pytest.raises(ValueError, match="ablate"):
        PipelineConfig(ablate="no-everything")
    with pytest.raises(ValueError, match="epochs"):
        PipelineConfig(epochs={"lmm": 1})


def test_config_json_roundtrip(tmp_path):
    cfg = tiny_config()
    path = tmp_path / "cfg.json"
    path.write_text(cfg.to_json())
    assert PipelineConfig.load(path) == cfg


# --- stages ----------------------------------------------------------------------


def test_gen_data_deterministic_bytes(tmp_path):
    cfg = tiny_config()
    a, b = RunPaths(tmp_path / "a"), RunPaths(tmp_path / "b")
    run_gen_data(cfg, a)
    run_gen_data(cfg, b)
    for name in ("dataset.bvd", "fixtures.bve"):
        assert (a.root / "data" / name).read_bytes() == (b.root / "data" / name).read_bytes()


def test_stage_without_prerequisites_fails(tmp_path):
    cfg = tiny_config()
    with pytest.raises(StageError, match="requires 'data'"):
        run_train_lmm(cfg, RunPaths(tmp_path / "run"))


def test_stage_writes_config_snapshot_and_metrics(tmp_path):
    cfg = tiny_config()
    paths = RunPaths(tmp_path / "run")
    run_gen_data(cfg, paths)
    stage_dir = paths.root / "data"
    snapshot = json.loads((stage_dir / "config.json").read_text())
    assert snapshot["seed"] == cfg.seed
    assert (stage_dir / "metrics.jsonl").exists()


# --- cli -------------------------------------------------------------------------


def test_cli_gen_data_and_prereq_error(tmp_path, capsys):
    run_dir = str(tmp_path / "run")
    assert main(["--config", TINY, "--run-dir", run_dir, "gen-data"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["records"] == 32
    with pytest.raises(StageError):
        main(["--config", TINY, "--run-dir", str(tmp_path / "other"), "train-lmm"])


def test_cli_seed_override_changes_data(tmp_path):
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    main(["--config", TINY, "--run-dir", a, "gen-data"])
    main(["--config", TINY, "--run-dir", b, "--seed", "99", "gen-data"])
    blob_a = (tmp_path / "a" / "data" / "dataset.bvd").read_bytes()
    blob_b = (tmp_path / "b" / "data" / "dataset.bvd").read_bytes()
    assert blob_a != blob_b


def test_cli_grad_check_small(capsys):
    assert main(["grad-check", "--probes", "1"]) == 0
    out = capsys.readouterr().out
    assert "pass" in out
    assert out.count("ok") >= 30


def test_cli_ablate_requires_mode(tmp_path, capsys):
    assert main(["--config", TINY, "--run-dir", str(tmp_path / "r"), "ablate"]) == 2


def test_cli_every_stage_command_in_order(tmp_path, capsys):
    run_dir = str(tmp_path / "chain")
    for command in (
        "gen-data", "train-lmm", "train-freq", "finetune-tfe",
        "train-align", "train-diffusion", "generate", "evaluate",
    ):
        assert main(["--config", TINY, "--run-dir", run_dir, command]) == 0, command
    report = json.loads((tmp_path / "chain" / "evaluate" / "report.json").read_text())
    assert set(report) >= {"top1_ca", "ga", "is_mean", "fid", "ssim_mean", "config"}
    out = capsys.readouterr().out
    assert '"ga"' in out  # evaluate prints the report


def test_cli_ablate_full_chain(tmp_path, capsys):
    assert main(["--config", TINY, "--run-dir", str(tmp_path / "ab"), "--ablate", "no-refine", "ablate"]) == 0
    report = json.loads((tmp_path / "ab" / "evaluate" / "report.json").read_text())
    assert report["config"]["ablate"] == "no-refine"
