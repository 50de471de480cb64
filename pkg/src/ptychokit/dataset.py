"""Image sources for experiments: synthetic shapes and IDX files."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .exceptions import FormatError
from .rng import SplitMix64

IDX3_MAGIC = 0x00000803
_IDX_SIDE = 28
_PADDED_SIDE = 32


def synth_dataset(count: int, size: int, seed: int) -> np.ndarray:
    """Random scenes of 1-3 bright rectangles and discs on black.

    Shapes get random position, extent and intensity; overlaps keep the
    brighter value. Returns a (count, size, size) array in [0, 1],
    deterministic in the seed.
    """
    rng = SplitMix64(seed)
    images = np.zeros((count, size, size), dtype=np.float64)
    rows = np.arange(size, dtype=np.float64)[:, None]
    cols = np.arange(size, dtype=np.float64)[None, :]
    for img in images:
        n_shapes = 1 + rng.next_u64() % 3
        for _ in range(n_shapes):
            intensity = rng.uniform(0.35, 1.0)
            if rng.next_u64() % 2 == 0:
                h = max(2, round(size * rng.uniform(0.15, 0.45)))
                w = max(2, round(size * rng.uniform(0.15, 0.45)))
                r0 = rng.next_u64() % max(1, size - h + 1)
                c0 = rng.next_u64() % max(1, size - w + 1)
                patch = img[r0 : r0 + h, c0 : c0 + w]
                np.maximum(patch, intensity, out=patch)
            else:
                radius = max(1.5, size * rng.uniform(0.08, 0.22))
                cr = rng.uniform(radius, size - 1 - radius)
                cc = rng.uniform(radius, size - 1 - radius)
                disc = (rows - cr) ** 2 + (cols - cc) ** 2 <= radius**2
                img[disc] = np.maximum(img[disc], intensity)
    return images


def load_idx(path: str | Path) -> np.ndarray:
    """Parse an IDX3 file of 28x28 u8 images, zero-padded to 32x32.

    Pixels are scaled to [0, 1]; the 2-pixel zero border keeps the
    padded size a power of two.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 16:
        raise FormatError(f"{path}: truncated IDX header ({len(raw)} bytes)")
    magic, count, n_rows, n_cols = struct.unpack(">IIII", raw[:16])
    if magic != IDX3_MAGIC:
        raise FormatError(f"{path}: bad IDX magic 0x{magic:08X}")
    if (n_rows, n_cols) != (_IDX_SIDE, _IDX_SIDE):
        raise FormatError(f"{path}: expected 28x28 images, got {n_rows}x{n_cols}")
    expected = 16 + count * n_rows * n_cols
    if len(raw) != expected:
        raise FormatError(
            f"{path}: expected {expected} bytes for {count} images, got {len(raw)}"
        )
    pixels = np.frombuffer(raw, dtype=np.uint8, offset=16)
    images = pixels.reshape(count, _IDX_SIDE, _IDX_SIDE).astype(np.float64) / 255.0
    pad = (_PADDED_SIDE - _IDX_SIDE) // 2
    out = np.zeros((count, _PADDED_SIDE, _PADDED_SIDE), dtype=np.float64)
    out[:, pad : pad + _IDX_SIDE, pad : pad + _IDX_SIDE] = images
    return out
