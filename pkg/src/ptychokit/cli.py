"""Command-line interface.

Subcommands: synth, train, simulate, recon, sweep, metrics, report.
Exit codes: 0 on success, 2 on configuration/input errors, 3 on numeric
failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .exceptions import (
    ConfigError,
    DimensionError,
    FormatError,
    GeometryError,
    NumericsError,
    PtychoError,
)


def _cmd_synth(args) -> int:
    from .dataset import synth_dataset
    from .formats import save_pgm, save_tensor

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    images = synth_dataset(args.count, args.size, args.seed)
    for i, img in enumerate(images):
        save_tensor(outdir / f"image_{i:04d}.ptyt", img)
        if args.pgm:
            save_pgm(outdir / f"image_{i:04d}.pgm", img)
    print(f"wrote {len(images)} images to {outdir}")
    return 0


def _cmd_train(args) -> int:
    from .dataset import load_idx, synth_dataset
    from .formats import save_weights
    from .generator import TrainConfig, train_decoder

    if args.dataset == "synthetic":
        images = synth_dataset(args.count, args.size, args.seed)
    else:
        images = load_idx(args.dataset)
        if args.count:
            images = images[: args.count]
    side = images.shape[1]
    arch = [args.latent, *args.hidden, side * side]
    cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        seed=args.seed,
    )
    decoder, final_loss = train_decoder(images, arch, cfg)
    save_weights(args.out, decoder)
    print(f"trained decoder {arch} on {len(images)} images; "
          f"final train MSE {final_loss:.6f}; saved to {args.out}")
    return 0


def _cmd_simulate(args) -> int:
    from .formats import load_tensor, save_measurements
    from .optics import build_camera_array, measure, sampling_mask

    image = load_tensor(args.image).real
    geometry = build_camera_array(image.shape[0], args.grid,
                                  args.aperture, args.overlap)
    masks = [
        sampling_mask(geometry.image_size, args.subsampling, args.seed + cam + 1)
        for cam in range(geometry.camera_count)
    ]
    m = measure(image, geometry, masks, args.noise_std, args.seed)
    save_measurements(args.out, m)
    print(f"simulated {m.camera_count} cameras at "
          f"{m.subsampling_pct():.2f}% sampling, noise std {args.noise_std}; "
          f"saved to {args.out}")
    return 0


def _cmd_recon(args) -> int:
    from .formats import load_measurements, load_weights, save_pgm, save_recon
    from .solvers import (
        SolverConfig,
        error_reduction,
        latent_descent,
        range_relaxed_descent,
    )

    m = load_measurements(args.measurements)
    if args.solver == "iera":
        result = error_reduction(m, iters=args.iters, seed=args.seed)
    else:
        if not args.weights:
            raise ConfigError(f"--weights is required for solver {args.solver}")
        G = load_weights(args.weights)
        cfg = SolverConfig(
            steps=args.steps,
            learning_rate=args.learning_rate,
            lambda_range=args.lambda_range,
            tv_weight=args.tv_weight if args.solver == "dp_plus_tv" else 0.0,
            seed=args.seed,
        )
        if args.solver == "dp":
            result = latent_descent(m, G, cfg)
        else:
            result = range_relaxed_descent(m, G, cfg)
    tensor_path, sidecar = save_recon(args.out, result)
    save_pgm(Path(args.out).with_suffix(".pgm"), result.x_hat)
    final = result.loss_trace[-1] if result.steps_run else result.initial_loss
    print(f"{args.solver}: {result.steps_run} steps, final loss {final:.6g}; "
          f"wrote {tensor_path} and {sidecar}")
    return 0


def _cmd_sweep(args) -> int:
    from .experiment import config_from_dict, run_experiment

    try:
        doc = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    if args.seed is not None:
        doc["master_seed"] = args.seed
    cfg = config_from_dict(doc)
    rows = run_experiment(cfg, args.out, render_figures=not args.no_figures)
    ok = sum(1 for r in rows if r.status == "ok")
    print(f"sweep complete: {ok}/{len(rows)} rows ok; results in {args.out}")
    return 0


def _cmd_metrics(args) -> int:
    from .formats import load_tensor
    from .metrics import psnr, ssim

    image = load_tensor(args.image).real
    ref = load_tensor(args.ref).real
    p = psnr(image, ref, peak=args.peak)
    s = ssim(image, ref)
    print(f"psnr_db={p!r} ssim={s!r}")
    return 0


def _cmd_report(args) -> int:
    from .experiment import read_results_csv
    from .figures import render_report

    rows = read_results_csv(args.results)
    written = render_report(rows, args.out)
    print(f"wrote {len(written)} report files to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ptychokit",
        description="Camera-array imaging simulator and reconstruction toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic shape dataset")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--size", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pgm", action="store_true", help="also write PGM previews")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train a decoder on a dataset")
    p.add_argument("--dataset", default="synthetic",
                   help="'synthetic' or path to an IDX3 file")
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--size", type=int, default=16)
    p.add_argument("--latent", type=int, default=16)
    p.add_argument("--hidden", type=int, nargs="*", default=[128])
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=2e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("simulate", help="simulate measurements of one image")
    p.add_argument("--image", required=True, help="PTYT tensor of the scene")
    p.add_argument("--grid", type=int, default=3)
    p.add_argument("--aperture", type=float, default=9.0)
    p.add_argument("--overlap", type=float, default=0.65)
    p.add_argument("--subsampling", type=float, default=1.0)
    p.add_argument("--noise-std", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("recon", help="run one solver on saved measurements")
    p.add_argument("--measurements", required=True)
    p.add_argument("--solver", required=True,
                   choices=["iera", "dp", "dp_plus", "dp_plus_tv"])
    p.add_argument("--weights", help="PTYG decoder weights (dp variants)")
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--iters", type=int, default=100, help="iera sweeps")
    p.add_argument("--learning-rate", type=float, default=0.05)
    p.add_argument("--lambda-range", type=float, default=0.1)
    p.add_argument("--tv-weight", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=_cmd_recon)

    p = sub.add_parser("sweep", help="run a full experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, help="override master_seed")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("metrics", help="compare two PTYT images")
    p.add_argument("--image", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--peak", type=float, default=1.0)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("report", help="render figures from a results.csv")
    p.add_argument("--results", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericsError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, FormatError, GeometryError, DimensionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PtychoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
