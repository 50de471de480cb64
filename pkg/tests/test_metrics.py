import math

import numpy as np
import pytest

from ptychokit import DimensionError, psnr, ssim
from ptychokit.metrics import SSIM_K1, SSIM_K2, SSIM_WINDOW, gaussian_window


def ssim_windowed_oracle(x: np.ndarray, ref: np.ndarray) -> float:
    """Direct per-window evaluation of the similarity formula."""
    w = gaussian_window()
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2
    rows, cols = x.shape
    values = []
    for r in range(rows - SSIM_WINDOW + 1):
        for c in range(cols - SSIM_WINDOW + 1):
            pa = x[r : r + SSIM_WINDOW, c : c + SSIM_WINDOW]
            pb = ref[r : r + SSIM_WINDOW, c : c + SSIM_WINDOW]
            mu_a = float((w * pa).sum())
            mu_b = float((w * pb).sum())
            var_a = float((w * (pa - mu_a) ** 2).sum())
            var_b = float((w * (pb - mu_b) ** 2).sum())
            cov = float((w * (pa - mu_a) * (pb - mu_b)).sum())
            values.append(
                ((2 * mu_a * mu_b + c1) * (2 * cov + c2))
                / ((mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2))
            )
    return float(np.mean(values))


def test_psnr_identical_images_is_infinite():
    x = np.random.default_rng(0).uniform(size=(16, 16))
    assert psnr(x, x) == math.inf


def test_psnr_const_half_case():
    x = np.zeros((16, 16))
    ref = np.full((16, 16), 0.5)
    assert psnr(x, ref, peak=1.0) == pytest.approx(6.0206, abs=1e-3)


def test_psnr_full_scale_error_is_zero_db():
    assert psnr(np.zeros((8, 8)), np.ones((8, 8)), peak=1.0) == pytest.approx(0.0, abs=1e-12)


def test_psnr_symmetric():
    rng = np.random.default_rng(1)
    x, y = rng.uniform(size=(12, 12)), rng.uniform(size=(12, 12))
    assert psnr(x, y) == pytest.approx(psnr(y, x), abs=1e-12)


def test_psnr_decreases_with_noise_level():
    rng = np.random.default_rng(2)
    base = rng.uniform(0.2, 0.8, size=(32, 32))
    means = []
    for std in (0.01, 0.05, 0.1):
        vals = [psnr(base, np.clip(base + rng.normal(0, std, base.shape), 0, 1))
                for _ in range(20)]
        means.append(np.mean(vals))
    assert means[0] > means[1] > means[2]


def test_psnr_shape_mismatch():
    with pytest.raises(DimensionError):
        psnr(np.zeros((4, 4)), np.zeros((8, 8)))


def test_ssim_self_similarity_is_one():
    x = np.random.default_rng(3).uniform(size=(16, 16))
    assert abs(ssim(x, x) - 1.0) < 1e-12


def test_ssim_constant_shift_below_one():
    rng = np.random.default_rng(4)
    x = rng.uniform(0.2, 0.7, size=(16, 16))
    shifted = x + 0.1
    assert ssim(x, shifted) < 1.0


def test_ssim_matches_direct_windowed_oracle():
    rng = np.random.default_rng(5)
    for _ in range(20):
        x = rng.uniform(size=(32, 32))
        y = np.clip(x + rng.normal(0, 0.1, size=(32, 32)), 0, 1)
        assert ssim(x, y) == pytest.approx(ssim_windowed_oracle(x, y), abs=1e-9)


def test_ssim_symmetric_and_bounded():
    rng = np.random.default_rng(6)
    for _ in range(10):
        x = rng.uniform(size=(16, 16))
        y = rng.uniform(size=(16, 16))
        s = ssim(x, y)
        assert s == pytest.approx(ssim(y, x), abs=1e-12)
        assert -1.0 <= s <= 1.0


def test_ssim_rejects_small_or_out_of_range_images():
    with pytest.raises(DimensionError):
        ssim(np.zeros((8, 8)), np.zeros((8, 8)))
    with pytest.raises(ValueError):
        ssim(np.full((16, 16), 1.5), np.zeros((16, 16)))
