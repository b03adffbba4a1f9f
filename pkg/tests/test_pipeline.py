"""End-to-end pipeline phases on a scaled-down experiment."""

import filecmp
import json
from pathlib import Path

import numpy as np
import pytest

from diagfilter.errors import ConfigError
from diagfilter.matio import load_matrix, load_trajectory
from diagfilter.pipeline import (
    TEST_SEED_OFFSET,
    ExperimentConfig,
    build_context,
    cmd_design,
    cmd_pretrain,
    cmd_run_all,
    cmd_test,
    cmd_train,
    default_config,
    load_training_bundle,
    multivariate_default_config,
)


def small_config() -> dict:
    cfg = default_config()
    cfg["train"].update({"m": 3, "horizon_seconds": 5.0})
    cfg["test"].update({"runs": 2, "horizon_seconds": 20.0, "onset_seconds": 10.0})
    return cfg


@pytest.fixture(scope="module")
def completed_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("exp")
    cfg = ExperimentConfig.from_dict(small_config())
    summary = cmd_run_all(cfg, out)
    return cfg, out, summary


def test_config_validation_rejects_defects():
    for mutate in (
        lambda c: c.update(mode="hybrid"),
        lambda c: c["train"].update(m=0),
        lambda c: c["filter"].update(margin=-1.0),
        lambda c: c["filter"].update(d_n=0),
        lambda c: c["filter"].update(pole=1.5),
        lambda c: c["train"].update(horizon_seconds=5.3),
        lambda c: c["test"].update(onset_seconds=100.0),
        lambda c: c["attack"].update(kind="replay"),
    ):
        cfg = default_config()
        mutate(cfg)
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(cfg)
    with pytest.raises(ConfigError, match="missing section"):
        ExperimentConfig.from_dict({"seed": 1})


def test_partial_config_inherits_defaults():
    base = default_config()
    cfg = ExperimentConfig.from_dict({"model": base["model"], "attack": base["attack"]})
    assert cfg.seed == base["seed"]
    assert cfg.plant["t_s"] == 0.5
    assert cfg.filter["d_n"] == 3
    assert cfg.mode == "data_assisted"


def test_model_path_indirection(tmp_path):
    base = default_config()
    (tmp_path / "model.json").write_text(json.dumps(base["model"]))
    raw = {"model_path": "model.json", "attack": base["attack"], "seed": 5}
    cfg_file = tmp_path / "config.json"
    cfg_file.write_text(json.dumps(raw))
    cfg = ExperimentConfig.from_file(cfg_file)
    assert cfg.model == base["model"]
    assert cfg.seed == 5
    raw["model_path"] = "missing.json"
    cfg_file.write_text(json.dumps(raw))
    with pytest.raises(ConfigError, match="not found"):
        ExperimentConfig.from_file(cfg_file)


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        ExperimentConfig.from_file(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        ExperimentConfig.from_file(bad)


def test_run_all_writes_every_artefact(completed_run):
    _, out, summary = completed_run
    expected = [
        "config.json",
        "model_matrices/A.csv",
        "model_matrices/B_d.csv",
        "model_matrices/B_f.csv",
        "model_matrices/C.csv",
        "model_matrices/D_f.csv",
        "train/qbar.csv",
        "train/training_summary.json",
        "filter.txt",
        "design_report.json",
        "test/report.json",
        "summary.json",
    ]
    for rel in expected:
        assert (out / rel).exists(), rel
    for i in range(3):
        assert (out / f"train/traj_{i:03d}.csv").exists()
        assert (out / f"train/traj_{i:03d}.meta.json").exists()
    for j in range(2):
        assert (out / f"test/clean_{j:02d}.csv").exists()
        assert (out / f"test/attack_{j:02d}.csv").exists()
    assert load_matrix(out / "model_matrices/A.csv").shape == (19, 19)
    assert set(summary) == {"train", "design", "test"}


def test_training_outputs_are_coherent(completed_run):
    cfg, out, summary = completed_run
    train = summary["train"]
    assert train["m"] == 3
    assert train["horizon_samples"] == 10
    seeds = [inst["seed"] for inst in train["instances"]]
    assert seeds == [cfg.seed + i for i in range(3)]
    t, y, meta = load_trajectory(out / "train/traj_001.csv")
    assert meta["seed"] == cfg.seed + 1
    assert y.shape == (25, 10)
    assert np.allclose(t, np.arange(1, 11) * 0.5)
    qbar = load_matrix(out / "train/qbar.csv")
    assert qbar.shape == (176, 176)
    assert np.min(np.linalg.eigvalsh(qbar)) > -1e-9


def test_design_report_and_artefact_agree(completed_run):
    _, out, summary = completed_run
    report = json.loads((out / "design_report.json").read_text())
    assert report["mode"] == "data_assisted"
    assert report["dominance"]["assisted_value"] <= report["dominance"]["pure_value"] + 1e-9
    cal = report["calibration"]
    assert cal["threshold"] == cal["tau_star"] + cal["margin"]
    assert cal["window"] == 20
    artefact = (out / "filter.txt").read_text()
    assert artefact.splitlines()[0] == "residual-filter-v1"
    assert json.dumps(cal, sort_keys=True) in artefact


def test_test_report_structure_and_seed_policy(completed_run):
    cfg, out, summary = completed_run
    report = summary["test"]
    assert report["runs"] == 2
    assert len(report["per_run"]) == 2
    seeds = [run["seed"] for run in report["per_run"]]
    assert seeds == [cfg.seed + TEST_SEED_OFFSET + j for j in range(2)]
    # the injected bias is orders of magnitude above any healthy energy here
    assert report["detections"] == 2
    for run in report["per_run"]:
        assert run["attack"]["alarm"]
        assert run["attack"]["alarm_time"] >= report["onset_seconds"]
        assert run["attack"]["latency"] >= 0.0
    trace = (out / "test/attack_00.csv").read_text().splitlines()
    assert trace[0] == "t,r,energy,alarm"
    assert len(trace) == 1 + 40


def test_design_rejects_tampered_training_average(completed_run, tmp_path):
    cfg, out, _ = completed_run
    clone = tmp_path / "clone"
    clone.mkdir()
    import shutil

    shutil.copytree(out / "train", clone / "train")
    qbar_path = clone / "train/qbar.csv"
    mat = load_matrix(qbar_path)
    mat[0, 0] += 1e-6
    from diagfilter.matio import save_matrix

    save_matrix(qbar_path, mat)
    with pytest.raises(ConfigError, match="disagrees"):
        cmd_design(cfg, clone)


def test_test_phase_needs_only_the_artefact(completed_run, tmp_path):
    cfg, out, summary = completed_run
    isolated = tmp_path / "isolated"
    isolated.mkdir()
    (isolated / "filter.txt").write_text((out / "filter.txt").read_text())
    report = cmd_test(cfg, isolated)
    assert report["detections"] == summary["test"]["detections"]
    assert report["per_run"] == summary["test"]["per_run"]


def test_test_phase_rejects_model_drift(completed_run, tmp_path):
    cfg, out, _ = completed_run
    drifted_raw = json.loads(json.dumps(cfg.to_dict()))
    drifted_raw["model"]["areas"][0]["inertia"] = 5.5
    drifted = ExperimentConfig.from_dict(drifted_raw)
    spot = tmp_path / "drift"
    spot.mkdir()
    (spot / "filter.txt").write_text((out / "filter.txt").read_text())
    with pytest.raises(ConfigError, match="different model"):
        cmd_test(drifted, spot)


def test_test_phase_requires_artefact(tmp_path):
    cfg = ExperimentConfig.from_dict(small_config())
    with pytest.raises(ConfigError, match="design phase"):
        cmd_test(cfg, tmp_path)


def test_pure_mode_designs_without_training(tmp_path):
    raw = small_config()
    raw["mode"] = "pure_model"
    cfg = ExperimentConfig.from_dict(raw)
    design = cmd_design(cfg, tmp_path)
    assert design.mode == "pure_model"
    report = json.loads((tmp_path / "design_report.json").read_text())
    assert report["dominance"] is None
    assert report["calibration"]["tau_star"] == 0.0
    assert report["calibration"]["threshold"] == pytest.approx(0.0005)


def test_pretraining_rejects_univariate_hypothesis(tmp_path):
    cfg = ExperimentConfig.from_dict(small_config())
    with pytest.raises(ConfigError, match="multivariate"):
        cmd_pretrain(cfg, tmp_path)


def test_pretraining_writes_margin_table(tmp_path):
    cfg = ExperimentConfig.from_dict(multivariate_default_config())
    report = cmd_pretrain(cfg, tmp_path)
    stored = json.loads((tmp_path / "pretrain_report.json").read_text())
    assert stored == report
    assert report["feasible"]
    assert report["j_star"] == 3
    assert report["gamma_star"] == pytest.approx(0.3, abs=1e-6)
    assert len(report["gammas"]) == 8


def test_training_is_byte_deterministic(tmp_path):
    raw = small_config()
    raw["train"]["m"] = 2
    cfg = ExperimentConfig.from_dict(raw)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    cmd_train(cfg, out_a)
    cmd_train(cfg, out_b)
    names = [p.name for p in sorted((out_a / "train").iterdir())]
    match, mismatch, errors = filecmp.cmpfiles(
        out_a / "train", out_b / "train", names, shallow=False
    )
    assert not mismatch and not errors
    assert len(match) == len(names)


def test_training_bundle_round_trip(completed_run):
    cfg, out, _ = completed_run
    ctx = build_context(cfg)
    bundle = load_training_bundle(ctx, out)
    assert len(bundle.q_list) == 3
    assert bundle.qbar.shape == (176, 176)
    stored = load_matrix(out / "train/qbar.csv")
    assert np.max(np.abs(bundle.qbar - stored)) < 1e-9
