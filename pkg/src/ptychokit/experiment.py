"""End-to-end experiment runner.

Sweeps (subsampling fraction, noise level) points over a set of test
images, runs the enabled solvers on simulated measurements and collects
PSNR/SSIM per reconstruction. Outputs per run:

- ``results.csv``   -- one row per (solver, sweep point, test image);
  deterministic in the master seed, byte-identical across reruns,
- ``timings.csv``   -- wall-clock per row (excluded from results.csv so
  the latter stays reproducible),
- ``manifest.json`` -- resolved configuration plus every derived seed,
- ``recon/``        -- reconstructions as PTYT tensors and PGM previews,
- figures rendered from the results table (unless disabled).
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import load_idx, synth_dataset
from .exceptions import ConfigError, PtychoError
from .formats import load_weights, save_pgm, save_tensor
from .generator import GeneratorWeights, project_to_range
from .metrics import psnr, ssim
from .optics import build_camera_array, measure, sampling_mask
from .rng import derive_seed
from .solvers import (
    ReconResult,
    SolverConfig,
    error_reduction,
    latent_descent,
    range_relaxed_descent,
)

SOLVER_NAMES = ("iera", "dp", "dp_plus", "dp_plus_tv")
_GENERATOR_SOLVERS = {"dp", "dp_plus", "dp_plus_tv"}

RESULTS_COLUMNS = ("solver", "subsampling_pct", "noise_pct", "image_index",
                   "psnr_db", "ssim", "status")


@dataclass(frozen=True)
class SweepPoint:
    subsampling: float
    noise_std: float


@dataclass
class ResultRow:
    solver: str
    subsampling_pct: float
    noise_pct: float
    image_index: int
    psnr_db: float
    ssim: float
    wall_seconds: float
    status: str


@dataclass
class ExperimentConfig:
    """Resolved sweep configuration; see :func:`config_from_dict`."""

    dataset: str
    sweep: list[SweepPoint]
    solvers: list[str]
    image_size: int = 16
    grid: int = 3
    aperture_diameter: float = 9.0
    overlap_frac: float = 0.65
    solver: SolverConfig = None
    iera_iters: int = 100
    generator_weights: str | None = None
    in_range_targets: bool = False
    projection_steps: int = 1500
    projection_lr: float = 0.05
    test_count: int = 10
    master_seed: int = 0

    def __post_init__(self):
        if self.solver is None:
            self.solver = SolverConfig(tv_weight=1e-4)
        if not self.sweep:
            raise ConfigError("sweep must contain at least one point")
        if self.test_count < 1:
            raise ConfigError("test_count must be >= 1")
        if not self.solvers:
            raise ConfigError("enable at least one solver")
        for name in self.solvers:
            if name not in SOLVER_NAMES:
                raise ConfigError(
                    f"unknown solver {name!r}; expected one of {SOLVER_NAMES}"
                )
        for pt in self.sweep:
            if not (0.0 < pt.subsampling <= 1.0):
                raise ConfigError(f"subsampling must lie in (0, 1], got {pt.subsampling}")
            if pt.noise_std < 0:
                raise ConfigError(f"noise_std must be >= 0, got {pt.noise_std}")
        needs_weights = bool(_GENERATOR_SOLVERS.intersection(self.solvers))
        if (needs_weights or self.in_range_targets) and not self.generator_weights:
            raise ConfigError("generator_weights required for dp/dp_plus solvers")
        if self.iera_iters < 1:
            raise ConfigError("iera_iters must be >= 1")


_TOP_KEYS = {
    "dataset", "sweep", "solvers", "image_size", "grid", "aperture_diameter",
    "overlap_frac", "solver_config", "iera_iters", "generator_weights",
    "in_range_targets", "projection_steps", "projection_lr", "test_count",
    "master_seed",
}
_POINT_KEYS = {"subsampling", "noise_std"}
_SOLVER_KEYS = {
    "steps", "learning_rate", "beta1", "beta2", "eps", "lambda_range",
    "tv_weight", "tv_eps", "x_steps", "z_steps", "optimizer",
}


def _reject_unknown(given: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(given) - allowed)
    if unknown:
        raise ConfigError(f"unknown {where} key(s): {', '.join(unknown)}")


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Build a config from a parsed JSON document, rejecting unknown keys."""
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "config")
    for key in ("dataset", "sweep", "solvers"):
        if key not in doc:
            raise ConfigError(f"config is missing required key {key!r}")
    points = []
    for i, entry in enumerate(doc["sweep"]):
        if not isinstance(entry, dict):
            raise ConfigError(f"sweep[{i}] must be an object")
        _reject_unknown(entry, _POINT_KEYS, f"sweep[{i}]")
        points.append(SweepPoint(float(entry["subsampling"]),
                                 float(entry.get("noise_std", 0.0))))
    solver_doc = dict(doc.get("solver_config", {}))
    _reject_unknown(solver_doc, _SOLVER_KEYS, "solver_config")
    solver_doc.setdefault("tv_weight", 1e-4)
    solver = SolverConfig(**solver_doc)
    kwargs = {
        k: doc[k]
        for k in _TOP_KEYS - {"dataset", "sweep", "solvers", "solver_config"}
        if k in doc
    }
    return ExperimentConfig(
        dataset=doc["dataset"],
        sweep=points,
        solvers=list(doc["solvers"]),
        solver=solver,
        **kwargs,
    )


def _load_test_images(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.dataset == "synthetic":
        return synth_dataset(cfg.test_count, cfg.image_size,
                             derive_seed(cfg.master_seed, 0xDA7A))
    images = load_idx(cfg.dataset)
    if images.shape[1] != cfg.image_size:
        raise ConfigError(
            f"dataset images are {images.shape[1]}px, config says {cfg.image_size}"
        )
    if len(images) < cfg.test_count:
        raise ConfigError(
            f"dataset holds {len(images)} images, test_count is {cfg.test_count}"
        )
    return images[: cfg.test_count]


def _run_solver(
    name: str,
    m,
    G: GeneratorWeights | None,
    cfg: ExperimentConfig,
    seed: int,
) -> ReconResult:
    if name == "iera":
        return error_reduction(m, iters=cfg.iera_iters, seed=seed)
    solver_cfg = replace(cfg.solver, seed=seed)
    if name == "dp":
        return latent_descent(m, G, solver_cfg)
    if name == "dp_plus":
        return range_relaxed_descent(m, G, replace(solver_cfg, tv_weight=0.0))
    if name == "dp_plus_tv":
        return range_relaxed_descent(m, G, solver_cfg)
    raise ConfigError(f"unknown solver {name!r}")


def _format_value(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def write_results_csv(rows: list[ResultRow], path: str | Path) -> None:
    lines = [",".join(RESULTS_COLUMNS)]
    for r in rows:
        lines.append(",".join(_format_value(getattr(r, c)) for c in RESULTS_COLUMNS))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def write_timings_csv(rows: list[ResultRow], path: str | Path) -> None:
    lines = ["solver,subsampling_pct,noise_pct,image_index,wall_seconds"]
    for r in rows:
        lines.append(
            f"{r.solver},{_format_value(r.subsampling_pct)},"
            f"{_format_value(r.noise_pct)},{r.image_index},{r.wall_seconds:.6f}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_results_csv(path: str | Path) -> list[ResultRow]:
    text = Path(path).read_text(encoding="ascii").strip().splitlines()
    if not text or text[0] != ",".join(RESULTS_COLUMNS):
        raise ConfigError(f"{path} does not look like a results table")
    rows = []
    for line in text[1:]:
        parts = line.split(",")
        rows.append(ResultRow(
            solver=parts[0],
            subsampling_pct=float(parts[1]),
            noise_pct=float(parts[2]),
            image_index=int(parts[3]),
            psnr_db=float(parts[4]),
            ssim=float(parts[5]),
            wall_seconds=0.0,
            status=parts[6],
        ))
    return rows


def _row_key(r: ResultRow):
    return (r.solver, r.subsampling_pct, r.noise_pct, r.image_index)


def run_experiment(
    cfg: ExperimentConfig,
    outdir: str | Path,
    render_figures: bool = True,
) -> list[ResultRow]:
    """Execute the full sweep and write all artifacts under ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    recon_dir = outdir / "recon"
    recon_dir.mkdir(exist_ok=True)

    geometry = build_camera_array(cfg.image_size, cfg.grid,
                                  cfg.aperture_diameter, cfg.overlap_frac)
    images = _load_test_images(cfg)
    G = None
    if _GENERATOR_SOLVERS.intersection(cfg.solvers) or cfg.in_range_targets:
        G = load_weights(cfg.generator_weights)
        if G.output_side != cfg.image_size:
            raise ConfigError(
                f"generator emits {G.output_side}px images, config says {cfg.image_size}"
            )

    targets = images
    if cfg.in_range_targets:
        targets = np.stack([
            project_to_range(G, images[i], steps=cfg.projection_steps,
                             learning_rate=cfg.projection_lr,
                             seed=derive_seed(cfg.master_seed, 0x7A, i))[1]
            for i in range(len(images))
        ])

    n = cfg.image_size
    rows: list[ResultRow] = []
    seed_log = []
    for p, point in enumerate(cfg.sweep):
        for i in range(len(targets)):
            meas_seed = derive_seed(cfg.master_seed, p, i)
            masks = [
                sampling_mask(n, point.subsampling, meas_seed + cam + 1)
                for cam in range(geometry.camera_count)
            ]
            m = measure(targets[i], geometry, masks, point.noise_std, meas_seed)
            pct = m.subsampling_pct()
            solver_seeds = {}
            for s_idx, name in enumerate(cfg.solvers):
                solver_seed = derive_seed(cfg.master_seed, p, i, 100 + s_idx)
                solver_seeds[name] = solver_seed
                t0 = time.perf_counter()
                try:
                    result = _run_solver(name, m, G, cfg, solver_seed)
                    wall = time.perf_counter() - t0
                    row = ResultRow(
                        solver=name,
                        subsampling_pct=pct,
                        noise_pct=100.0 * point.noise_std,
                        image_index=i,
                        psnr_db=psnr(result.x_hat, targets[i]),
                        ssim=ssim(result.x_hat, targets[i]),
                        wall_seconds=wall,
                        status="ok",
                    )
                    stem = recon_dir / f"{name}_p{p:02d}_i{i:02d}"
                    save_tensor(stem.with_suffix(".ptyt"), result.x_hat)
                    save_pgm(stem.with_suffix(".pgm"), result.x_hat)
                except PtychoError as exc:
                    wall = time.perf_counter() - t0
                    row = ResultRow(
                        solver=name,
                        subsampling_pct=pct,
                        noise_pct=100.0 * point.noise_std,
                        image_index=i,
                        psnr_db=math.nan,
                        ssim=math.nan,
                        wall_seconds=wall,
                        status=f"failed:{type(exc).__name__}",
                    )
                rows.append(row)
            seed_log.append({
                "point": p, "image": i,
                "measurement_seed": meas_seed,
                "solver_seeds": solver_seeds,
            })

    rows.sort(key=_row_key)
    write_results_csv(rows, outdir / "results.csv")
    write_timings_csv(rows, outdir / "timings.csv")

    manifest = {
        "version": __version__,
        "config": _config_as_dict(cfg),
        "test_image_indices": list(range(len(targets))),
        "mask_strategy": "independent_per_camera",
        "seeds": seed_log,
    }
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="ascii"
    )

    if render_figures:
        from .figures import render_report

        render_report(rows, outdir)
    return rows


def _config_as_dict(cfg: ExperimentConfig) -> dict:
    doc = asdict(cfg)
    doc["solver_config"] = doc.pop("solver")
    return doc
