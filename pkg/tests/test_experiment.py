import json

import numpy as np
import pytest

import ptychokit as pk
from ptychokit import ConfigError, NumericsError
from ptychokit.dataset import synth_dataset
from ptychokit.experiment import (
    config_from_dict,
    read_results_csv,
    run_experiment,
)
from ptychokit.formats import save_weights
from ptychokit.generator import TrainConfig


@pytest.fixture(scope="module")
def quick_weights(tmp_path_factory):
    data = synth_dataset(50, 16, 1)
    decoder, _ = pk.train_decoder(data, [16, 64, 256], TrainConfig(epochs=40, seed=2))
    path = tmp_path_factory.mktemp("weights") / "dec.ptyg"
    save_weights(path, decoder)
    return str(path)


def _doc(weights, **overrides):
    doc = {
        "dataset": "synthetic",
        "image_size": 16,
        "grid": 3,
        "aperture_diameter": 9.0,
        "overlap_frac": 0.65,
        "sweep": [
            {"subsampling": 0.05, "noise_std": 0.0},
            {"subsampling": 0.2, "noise_std": 0.0},
            {"subsampling": 0.2, "noise_std": 0.01},
        ],
        "solvers": ["iera", "dp"],
        "solver_config": {"steps": 60, "learning_rate": 0.05},
        "iera_iters": 10,
        "generator_weights": weights,
        "test_count": 2,
        "master_seed": 31,
    }
    doc.update(overrides)
    return doc


def test_unknown_top_level_key_rejected(quick_weights):
    with pytest.raises(ConfigError) as exc:
        config_from_dict(_doc(quick_weights, typo_key=1))
    assert "typo_key" in str(exc.value)


def test_unknown_sweep_key_rejected(quick_weights):
    doc = _doc(quick_weights)
    doc["sweep"][0]["fractoin"] = 0.5
    with pytest.raises(ConfigError):
        config_from_dict(doc)


def test_unknown_solver_config_key_rejected(quick_weights):
    doc = _doc(quick_weights)
    doc["solver_config"]["momentum"] = 0.9
    with pytest.raises(ConfigError):
        config_from_dict(doc)


def test_missing_required_key_rejected():
    with pytest.raises(ConfigError):
        config_from_dict({"dataset": "synthetic"})


def test_weights_required_for_generator_solvers():
    doc = _doc(None)
    doc.pop("generator_weights")
    with pytest.raises(ConfigError):
        config_from_dict(doc)


def test_row_count_and_schema(quick_weights, tmp_path):
    cfg = config_from_dict(_doc(quick_weights))
    rows = run_experiment(cfg, tmp_path / "run", render_figures=False)
    # 2 solvers x 3 sweep points x 2 images
    assert len(rows) == 12
    text = (tmp_path / "run" / "results.csv").read_text().splitlines()
    assert text[0] == "solver,subsampling_pct,noise_pct,image_index,psnr_db,ssim,status"
    assert len(text) == 13


def test_rerun_is_byte_identical(quick_weights, tmp_path):
    cfg = config_from_dict(_doc(quick_weights))
    run_experiment(cfg, tmp_path / "a", render_figures=False)
    run_experiment(cfg, tmp_path / "b", render_figures=False)
    assert (tmp_path / "a" / "results.csv").read_bytes() == \
        (tmp_path / "b" / "results.csv").read_bytes()
    assert (tmp_path / "a" / "manifest.json").read_bytes() == \
        (tmp_path / "b" / "manifest.json").read_bytes()


def test_reported_subsampling_matches_masks(quick_weights, tmp_path):
    cfg = config_from_dict(_doc(quick_weights))
    rows = run_experiment(cfg, tmp_path / "run", render_figures=False)
    n, L = 256, 9
    expected = 100.0 * round(0.05 * n) * L / (n * L)
    low = [r for r in rows if abs(r.subsampling_pct - expected) < 1e-9]
    assert len(low) == 4  # 2 solvers x 2 images at the 5% point


def test_failed_solver_recorded_and_run_continues(quick_weights, tmp_path, monkeypatch):
    import ptychokit.experiment as exp

    real = exp._run_solver
    calls = {"n": 0}

    def flaky(name, m, G, cfg, seed):
        calls["n"] += 1
        if calls["n"] == 1:
            raise NumericsError("synthetic failure")
        return real(name, m, G, cfg, seed)

    monkeypatch.setattr(exp, "_run_solver", flaky)
    cfg = config_from_dict(_doc(quick_weights))
    rows = run_experiment(cfg, tmp_path / "run", render_figures=False)
    failed = [r for r in rows if r.status != "ok"]
    assert len(rows) == 12
    assert len(failed) == 1
    assert failed[0].status == "failed:NumericsError"
    assert np.isnan(failed[0].psnr_db)


def test_manifest_records_seeds_and_config(quick_weights, tmp_path):
    cfg = config_from_dict(_doc(quick_weights))
    run_experiment(cfg, tmp_path / "run", render_figures=False)
    manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
    assert manifest["config"]["master_seed"] == 31
    assert manifest["mask_strategy"] == "independent_per_camera"
    assert len(manifest["seeds"]) == 6  # 3 points x 2 images
    assert set(manifest["seeds"][0]["solver_seeds"]) == {"iera", "dp"}
    assert manifest["test_image_indices"] == [0, 1]


def test_recon_artifacts_written(quick_weights, tmp_path):
    cfg = config_from_dict(_doc(quick_weights))
    run_experiment(cfg, tmp_path / "run", render_figures=False)
    recon = tmp_path / "run" / "recon"
    ptyts = sorted(p.name for p in recon.glob("*.ptyt"))
    pgms = sorted(p.name for p in recon.glob("*.pgm"))
    assert len(ptyts) == 12 and len(pgms) == 12
    assert "dp_p00_i00.ptyt" in ptyts


def test_figures_rendered_alongside_results(quick_weights, tmp_path):
    cfg = config_from_dict(_doc(quick_weights))
    run_experiment(cfg, tmp_path / "run", render_figures=True)
    out = tmp_path / "run"
    assert (out / "summary.csv").exists()
    pngs = list(out.glob("*.png"))
    assert pngs, "report should render at least one figure"


def test_results_csv_roundtrip(quick_weights, tmp_path):
    cfg = config_from_dict(_doc(quick_weights))
    rows = run_experiment(cfg, tmp_path / "run", render_figures=False)
    back = read_results_csv(tmp_path / "run" / "results.csv")
    assert len(back) == len(rows)
    for a, b in zip(rows, back):
        assert a.solver == b.solver
        assert a.image_index == b.image_index
        assert a.psnr_db == pytest.approx(b.psnr_db, abs=0) or (
            np.isnan(a.psnr_db) and np.isnan(b.psnr_db)
        )


def test_idx_dataset_source(quick_weights, tmp_path):
    import struct

    from ptychokit.dataset import IDX3_MAGIC

    imgs = (synth_dataset(3, 28, 4) * 255).astype(np.uint8)
    idx_path = tmp_path / "data.idx"
    idx_path.write_bytes(struct.pack(">IIII", IDX3_MAGIC, 3, 28, 28) + imgs.tobytes())
    doc = _doc(None, dataset=str(idx_path), image_size=32, test_count=2,
               solvers=["iera"], aperture_diameter=9.0, grid=3)
    doc.pop("generator_weights")
    cfg = config_from_dict(doc)
    rows = run_experiment(cfg, tmp_path / "run", render_figures=False)
    assert len(rows) == 6
    assert all(r.status == "ok" for r in rows)
