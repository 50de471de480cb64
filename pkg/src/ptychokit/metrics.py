"""Image quality metrics: PSNR and windowed SSIM on [0, 1] grayscale."""

from __future__ import annotations

import math

import numpy as np

from .exceptions import DimensionError

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _pair(x: np.ndarray, ref: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(ref, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError("metric inputs must be 2D images")
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def psnr(x: np.ndarray, ref: np.ndarray, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical images."""
    if peak <= 0:
        raise ValueError(f"peak must be > 0, got {peak}")
    a, b = _pair(x, ref)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size, dtype=np.float64) - half
    g1 = np.exp(-(coords**2) / (2.0 * sigma * sigma))
    w = np.outer(g1, g1)
    return w / w.sum()


def ssim(x: np.ndarray, ref: np.ndarray) -> float:
    """Mean local structural similarity with a Gaussian window.

    Window 11x11 with sigma 1.5, stability constants K1 = 0.01 and
    K2 = 0.03 at dynamic range 1.0, aggregated over fully valid window
    positions (no padding). Inputs must lie in [0, 1].
    """
    a, b = _pair(x, ref)
    if min(a.shape) < SSIM_WINDOW:
        raise DimensionError(
            f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW} for SSIM"
        )
    tol = 1e-9
    for name, img in (("x", a), ("ref", b)):
        if img.min() < -tol or img.max() > 1.0 + tol:
            raise ValueError(f"{name} must lie in [0, 1] for SSIM")

    w = gaussian_window()
    wa = np.lib.stride_tricks.sliding_window_view(a, (SSIM_WINDOW, SSIM_WINDOW))
    wb = np.lib.stride_tricks.sliding_window_view(b, (SSIM_WINDOW, SSIM_WINDOW))
    mu_a = np.tensordot(wa, w, axes=([2, 3], [0, 1]))
    mu_b = np.tensordot(wb, w, axes=([2, 3], [0, 1]))
    e_aa = np.tensordot(wa * wa, w, axes=([2, 3], [0, 1]))
    e_bb = np.tensordot(wb * wb, w, axes=([2, 3], [0, 1]))
    e_ab = np.tensordot(wa * wb, w, axes=([2, 3], [0, 1]))
    var_a = e_aa - mu_a * mu_a
    var_b = e_bb - mu_b * mu_b
    cov = e_ab - mu_a * mu_b

    c1 = SSIM_K1 * SSIM_K1
    c2 = SSIM_K2 * SSIM_K2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))
