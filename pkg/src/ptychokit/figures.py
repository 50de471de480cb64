"""Figure rendering for sweep results.

Aggregates the results table into per-solver mean curves and writes them
as PNG files next to the delimited output, plus a ``summary.csv`` of the
aggregated values. Quantities here are derived views; ``results.csv``
stays the canonical record.
"""

from __future__ import annotations

import math
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def _aggregate(rows):
    """Mean finite psnr/ssim per (solver, subsampling_pct, noise_pct)."""
    groups = defaultdict(list)
    for r in rows:
        if r.status == "ok":
            groups[(r.solver, r.subsampling_pct, r.noise_pct)].append(r)
    summary = []
    for (solver, sub, noise), members in sorted(groups.items()):
        psnrs = [m.psnr_db for m in members if math.isfinite(m.psnr_db)]
        ssims = [m.ssim for m in members if math.isfinite(m.ssim)]
        summary.append({
            "solver": solver,
            "subsampling_pct": sub,
            "noise_pct": noise,
            "mean_psnr_db": sum(psnrs) / len(psnrs) if psnrs else math.nan,
            "mean_ssim": sum(ssims) / len(ssims) if ssims else math.nan,
            "n_images": len(members),
        })
    return summary


def _write_summary(summary, path: Path) -> None:
    lines = ["solver,subsampling_pct,noise_pct,mean_psnr_db,mean_ssim,n_images"]
    for s in summary:
        lines.append(
            f"{s['solver']},{s['subsampling_pct']!r},{s['noise_pct']!r},"
            f"{s['mean_psnr_db']!r},{s['mean_ssim']!r},{s['n_images']}"
        )
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def _line_plot(summary, x_key, fixed_key, metric, ylabel, path: Path) -> bool:
    """One line per (solver, fixed value) of mean metric vs x_key."""
    curves = defaultdict(list)
    for s in summary:
        curves[(s["solver"], s[fixed_key])].append((s[x_key], s[metric]))
    curves = {k: sorted(v) for k, v in curves.items() if len(v) >= 2}
    if not curves:
        return False
    fig, ax = plt.subplots(figsize=(6, 4))
    for (solver, fixed), pts in sorted(curves.items()):
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        label = solver
        if len({k[1] for k in curves}) > 1:
            label = f"{solver} ({fixed_key.split('_')[0]} {fixed:g}%)"
        ax.plot(xs, ys, marker="o", label=label)
    ax.set_xlabel(x_key.replace("_", " "))
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return True


def _bar_plot(summary, metric, ylabel, path: Path) -> bool:
    """Grouped bars per sweep point; fallback when no curve has 2+ points."""
    points = sorted({(s["subsampling_pct"], s["noise_pct"]) for s in summary})
    solvers = sorted({s["solver"] for s in summary})
    if not points or not solvers:
        return False
    values = {(s["solver"], s["subsampling_pct"], s["noise_pct"]): s[metric]
              for s in summary}
    fig, ax = plt.subplots(figsize=(6, 4))
    width = 0.8 / len(solvers)
    for si, solver in enumerate(solvers):
        xs = [pi + si * width for pi in range(len(points))]
        ys = [values.get((solver, *pt), math.nan) for pt in points]
        ax.bar(xs, ys, width=width, label=solver)
    ax.set_xticks([pi + 0.4 - width / 2 for pi in range(len(points))])
    ax.set_xticklabels([f"{sub:.3g}% / {noise:.3g}%" for sub, noise in points],
                       rotation=20, ha="right")
    ax.set_xlabel("subsampling % / noise %")
    ax.set_ylabel(ylabel)
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return True


def render_report(rows, outdir: str | Path) -> list[Path]:
    """Render summary figures and CSV for a results table; returns paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    summary = _aggregate(rows)
    written = []
    summary_path = outdir / "summary.csv"
    _write_summary(summary, summary_path)
    written.append(summary_path)
    for metric, ylabel, stem in (
        ("mean_psnr_db", "mean PSNR (dB)", "psnr"),
        ("mean_ssim", "mean SSIM", "ssim"),
    ):
        rendered = False
        path = outdir / f"{stem}_vs_subsampling.png"
        if _line_plot(summary, "subsampling_pct", "noise_pct", metric, ylabel, path):
            written.append(path)
            rendered = True
        path = outdir / f"{stem}_vs_noise.png"
        if _line_plot(summary, "noise_pct", "subsampling_pct", metric, ylabel, path):
            written.append(path)
            rendered = True
        if not rendered and summary:
            path = outdir / f"{stem}_by_point.png"
            if _bar_plot(summary, metric, ylabel, path):
                written.append(path)
    return written
