"""Unitary 2D FFT primitives on power-of-two grids.

All transforms use orthonormal scaling (1/sqrt(N) per 1D pass) so that
Parseval holds exactly and forward/adjoint operator pairs need no extra
normalization. Dimensions are restricted to powers of two; the experiment
layer pads or crops data to satisfy this.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionError


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _as_image(x: np.ndarray, name: str = "image") -> np.ndarray:
    arr = np.asarray(x)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2D, got shape {arr.shape}")
    return arr


def _check_pow2(arr: np.ndarray, name: str = "image") -> None:
    rows, cols = arr.shape
    if not (is_power_of_two(rows) and is_power_of_two(cols)):
        raise DimensionError(
            f"{name} dimensions must be powers of two, got {rows}x{cols}"
        )


def fft2(img: np.ndarray) -> np.ndarray:
    """Unitary forward 2D DFT."""
    arr = _as_image(img)
    _check_pow2(arr)
    return np.fft.fft2(arr, norm="ortho")


def ifft2(img: np.ndarray) -> np.ndarray:
    """Unitary inverse 2D DFT; exact inverse of :func:`fft2`."""
    arr = _as_image(img)
    _check_pow2(arr)
    return np.fft.ifft2(arr, norm="ortho")


def fftshift(img: np.ndarray) -> np.ndarray:
    """Swap quadrants so DC moves to the array center.

    An involution for even dimensions, which power-of-two grids guarantee.
    """
    return np.fft.fftshift(_as_image(img))


def ifftshift(img: np.ndarray) -> np.ndarray:
    """Inverse quadrant swap (equals fftshift on even dimensions)."""
    return np.fft.ifftshift(_as_image(img))


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise product of two equally sized images."""
    x = _as_image(a, "a")
    y = _as_image(b, "b")
    if x.shape != y.shape:
        raise DimensionError(f"shape mismatch: {x.shape} vs {y.shape}")
    return x * y
