"""Coherent camera-array acquisition model.

A scene ``x`` is observed by L cameras laid out on a square grid. Camera
``cam`` sees the inverse transform of the pupil-masked, centered spectrum
of ``x``; a random subsampling mask then discards pixels and the sensor
records magnitudes only:

    y = |M ifft2(ifftshift(P * fftshift(fft2(x))))| + noise

The bandlimiting part (everything except the subsampling mask M) is
self-adjoint under the unitary FFT convention, which keeps the exact
adjoint and the magnitude-residual gradient cheap to evaluate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np

from .exceptions import DimensionError, GeometryError
from .fourier import is_power_of_two
from .rng import SplitMix64


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class CameraArrayGeometry:
    """Square grid of circular pupils in the centered Fourier plane.

    ``centers`` holds (row, col) coordinates of each pupil center,
    row-major over the grid; ``pupils`` is the precomputed stack of
    binary masks, one per camera.
    """

    image_size: int
    grid: int
    aperture_diameter: float
    overlap_frac: float
    centers: np.ndarray
    pupils: np.ndarray

    @property
    def camera_count(self) -> int:
        return self.grid * self.grid

    def __post_init__(self):
        if self.centers.shape != (self.camera_count, 2):
            raise GeometryError(
                f"expected {self.camera_count} pupil centers, got {self.centers.shape}"
            )
        if self.pupils.shape != (self.camera_count, self.image_size, self.image_size):
            raise GeometryError(f"pupil stack has shape {self.pupils.shape}")


def _disc_mask(size: int, center: tuple[float, float], diameter: float) -> np.ndarray:
    rows = np.arange(size, dtype=np.float64)[:, None]
    cols = np.arange(size, dtype=np.float64)[None, :]
    rsq = (rows - center[0]) ** 2 + (cols - center[1]) ** 2
    return (rsq <= (diameter / 2.0) ** 2).astype(np.float64)


def build_camera_array(
    image_size: int,
    grid: int,
    aperture_diameter: float,
    overlap_frac: float,
) -> CameraArrayGeometry:
    """Lay out a grid x grid array of pupils centered on DC.

    Neighbor spacing is ``round(aperture_diameter * (1 - overlap_frac))``
    pixels; raises :class:`GeometryError` with the minimum viable plane
    size when the outermost pupils would not fit.
    """
    if not is_power_of_two(image_size):
        raise DimensionError(f"image_size must be a power of two, got {image_size}")
    if grid < 1:
        raise GeometryError(f"grid must be >= 1, got {grid}")
    if aperture_diameter < 1:
        raise GeometryError(f"aperture_diameter must be >= 1, got {aperture_diameter}")
    if not (0.0 <= overlap_frac < 1.0):
        raise GeometryError(f"overlap_frac must lie in [0, 1), got {overlap_frac}")

    spacing = _round_half_up(aperture_diameter * (1.0 - overlap_frac))
    span = (grid - 1) * spacing + aperture_diameter
    if span > image_size:
        raise GeometryError(
            f"pupil array spans {span:g} px (spacing {spacing}); "
            f"requires image_size >= {math.ceil(span)}"
        )

    dc = image_size // 2
    offsets = (np.arange(grid, dtype=np.float64) - (grid - 1) / 2.0) * spacing
    centers = np.array(
        [(dc + dr, dc + dcoly) for dr in offsets for dcoly in offsets],
        dtype=np.float64,
    )
    pupils = np.stack(
        [_disc_mask(image_size, (cr, cc), aperture_diameter) for cr, cc in centers]
    )
    return CameraArrayGeometry(
        image_size=image_size,
        grid=grid,
        aperture_diameter=float(aperture_diameter),
        overlap_frac=float(overlap_frac),
        centers=centers,
        pupils=pupils,
    )


def full_field_geometry(image_size: int) -> CameraArrayGeometry:
    """Single camera whose pupil passes the whole Fourier plane.

    The identity configuration: with full sampling the forward operator
    reduces to the identity map. Mostly useful for calibration and tests.
    """
    if not is_power_of_two(image_size):
        raise DimensionError(f"image_size must be a power of two, got {image_size}")
    dc = image_size // 2
    return CameraArrayGeometry(
        image_size=image_size,
        grid=1,
        aperture_diameter=float(image_size) * math.sqrt(2.0),
        overlap_frac=0.0,
        centers=np.array([[dc, dc]], dtype=np.float64),
        pupils=np.ones((1, image_size, image_size), dtype=np.float64),
    )


def pupil_mask(geometry: CameraArrayGeometry, cam: int) -> np.ndarray:
    """Binary pupil of camera ``cam`` (0-based index)."""
    if not 0 <= cam < geometry.camera_count:
        raise IndexError(f"camera index {cam} out of range [0, {geometry.camera_count})")
    return geometry.pupils[cam]


@dataclass
class SamplingMask:
    """Random subset of flat pixel indices retained by a sensor."""

    size: int
    kept: np.ndarray
    fraction: float
    seed: int

    @cached_property
    def grid(self) -> np.ndarray:
        g = np.zeros(self.size * self.size, dtype=bool)
        g[self.kept] = True
        return g.reshape(self.size, self.size)


def sampling_mask(size: int, fraction: float, seed: int) -> SamplingMask:
    """Keep exactly round(fraction * size^2) pixels, chosen as the first
    entries of a seeded Fisher-Yates permutation."""
    if not (0.0 < fraction <= 1.0):
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    total = size * size
    k = _round_half_up(fraction * total)
    perm = SplitMix64(seed).permutation(total)
    kept = np.sort(perm[:k]).astype(np.uint32)
    return SamplingMask(size=size, kept=kept, fraction=float(fraction), seed=int(seed))


@dataclass
class Measurements:
    """Per-camera magnitude images with their subsampling masks.

    Unsampled pixels of ``magnitudes`` are stored as 0 and carry no
    information; consumers must consult the masks.
    """

    geometry: CameraArrayGeometry
    magnitudes: np.ndarray
    masks: tuple[SamplingMask, ...]
    noise_std: float
    master_seed: int

    @property
    def camera_count(self) -> int:
        return self.geometry.camera_count

    @cached_property
    def mask_stack(self) -> np.ndarray:
        return np.stack([m.grid for m in self.masks])

    def kept_total(self) -> int:
        return int(sum(len(m.kept) for m in self.masks))

    def subsampling_pct(self) -> float:
        """Retained samples x 100 / (pixels x cameras)."""
        n = self.geometry.image_size**2
        return 100.0 * self.kept_total() / (n * self.camera_count)


def _check_field(x: np.ndarray, image_size: int) -> np.ndarray:
    arr = np.asarray(x)
    if arr.shape != (image_size, image_size):
        raise DimensionError(
            f"field shape {arr.shape} does not match geometry {image_size}x{image_size}"
        )
    return arr


def _bandlimit_stack(x: np.ndarray, pupils: np.ndarray) -> np.ndarray:
    """Apply every camera's pupil filter at once; returns (L, n, n)."""
    spectrum = np.fft.fftshift(np.fft.fft2(x, norm="ortho"))
    filtered = pupils * spectrum[None, :, :]
    return np.fft.ifft2(np.fft.ifftshift(filtered, axes=(-2, -1)), norm="ortho", axes=(-2, -1))


def camera_field(x: np.ndarray, geometry: CameraArrayGeometry, cam: int) -> np.ndarray:
    """Bandlimited camera-plane field of camera ``cam`` (no subsampling).

    Self-adjoint under the unitary transform convention because the pupil
    is real and applied symmetrically between fft2 and ifft2.
    """
    arr = _check_field(x, geometry.image_size)
    pupil = pupil_mask(geometry, cam)
    spectrum = np.fft.fftshift(np.fft.fft2(arr, norm="ortho"))
    return np.fft.ifft2(np.fft.ifftshift(pupil * spectrum), norm="ortho")


def forward_linear(
    x: np.ndarray,
    geometry: CameraArrayGeometry,
    cam: int,
    mask: SamplingMask,
) -> np.ndarray:
    """Linear acquisition operator of one camera: subsampled bandlimited field."""
    u = camera_field(x, geometry, cam)
    return np.where(mask.grid, u, 0.0 + 0.0j)


def adjoint_linear(
    u: np.ndarray,
    geometry: CameraArrayGeometry,
    cam: int,
    mask: SamplingMask,
) -> np.ndarray:
    """Exact adjoint of :func:`forward_linear`."""
    arr = _check_field(u, geometry.image_size)
    masked = np.where(mask.grid, arr, 0.0 + 0.0j)
    return camera_field(masked, geometry, cam)


def measure(
    x: np.ndarray,
    geometry: CameraArrayGeometry,
    masks: list[SamplingMask] | tuple[SamplingMask, ...],
    noise_std: float,
    seed: int,
) -> Measurements:
    """Simulate the sensor: magnitudes at sampled pixels plus Gaussian noise.

    Camera ``cam`` (0-based) draws its noise from a fresh stream seeded
    ``seed + cam + 1``; negative post-noise values are clamped to zero
    since physical magnitudes are nonnegative. Deterministic in
    (x, seed, noise_std).
    """
    arr = _check_field(x, geometry.image_size)
    if np.iscomplexobj(arr):
        raise DimensionError("measured scene must be real-valued")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("scene must be normalized to [0, 1] before measurement")
    if noise_std < 0:
        raise ValueError(f"noise_std must be >= 0, got {noise_std}")
    if len(masks) != geometry.camera_count:
        raise DimensionError(
            f"need {geometry.camera_count} masks, got {len(masks)}"
        )
    for m in masks:
        if m.size != geometry.image_size:
            raise DimensionError("mask size does not match geometry")

    mags = np.abs(_bandlimit_stack(arr.astype(np.float64), geometry.pupils))
    y = np.zeros_like(mags)
    for cam, m in enumerate(masks):
        vals = mags[cam].ravel()[m.kept]
        if noise_std > 0 and len(vals) > 0:
            noise = SplitMix64(seed + cam + 1).gaussians(len(vals))
            vals = np.maximum(vals + noise_std * noise, 0.0)
        plane = y[cam].ravel()
        plane[m.kept] = vals
        y[cam] = plane.reshape(mags[cam].shape)
    return Measurements(
        geometry=geometry,
        magnitudes=y,
        masks=tuple(masks),
        noise_std=float(noise_std),
        master_seed=int(seed),
    )


def measurement_loss(x: np.ndarray, m: Measurements) -> float:
    """Sum over cameras of squared magnitude misfit at sampled pixels."""
    arr = _check_field(x, m.geometry.image_size)
    fields = _bandlimit_stack(arr, m.geometry.pupils)
    diff = (m.magnitudes - np.abs(fields)) * m.mask_stack
    return float(np.sum(diff * diff))


def measurement_loss_and_gradient(
    x: np.ndarray, m: Measurements
) -> tuple[float, np.ndarray]:
    """Misfit loss together with its Wirtinger residual gradient.

    Returns ``(loss, g)`` where ``loss = sum_l ||y_l - |A_l x|||^2`` and
    ``g = sum_l A_l^H ((|u_l| - y_l) * phase(u_l))`` with ``u_l = A_l x``
    and ``phase(0) := 0``. For a real-valued scene the descent gradient
    of ``loss`` is ``2 * g.real``.
    """
    arr = _check_field(x, m.geometry.image_size)
    fields = _bandlimit_stack(arr, m.geometry.pupils)
    u = np.where(m.mask_stack, fields, 0.0 + 0.0j)
    mag = np.abs(u)
    diff = mag - m.magnitudes
    loss = float(np.sum(diff * diff))
    phase = np.divide(u, mag, out=np.zeros_like(u), where=mag > 0)
    residual = diff * phase
    spectra = m.geometry.pupils * np.fft.fftshift(
        np.fft.fft2(residual, norm="ortho", axes=(-2, -1)), axes=(-2, -1)
    )
    back = np.fft.ifft2(
        np.fft.ifftshift(spectra, axes=(-2, -1)), norm="ortho", axes=(-2, -1)
    )
    return loss, back.sum(axis=0)


def residual_gradient(x: np.ndarray, m: Measurements) -> np.ndarray:
    """Wirtinger gradient of half the squared magnitude misfit.

    Matches central finite differences of the misfit along real
    directions through ``2 * residual_gradient(x, m).real``.
    """
    _, grad = measurement_loss_and_gradient(x, m)
    return grad
