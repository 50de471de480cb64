"""Binary and text artifact formats.

Tensor format (magic ``PTYT``), little-endian throughout:

    "PTYT" | u8 dtype (0 = real64, 1 = complex as re,im float64 pairs)
           | u8 ndim | ndim x u32 dims | row-major payload

Generator weights (magic ``PTYG``):

    "PTYG" | u8 kind (0 = linear, 1 = mlp) | u32 latent_dim
           | u32 output_side | u32 n_layers
           | per layer: u32 out, u32 in, u8 activation
                        (0 none, 1 relu, 2 sigmoid, 3 tanh),
                        W transposed as float64, bias as float64

Measurement container (magic ``PTYM``): header scalars
(u32 image_size, u32 grid, u8 geometry kind: 0 disc grid / 1 full field,
f64 aperture_diameter, f64 overlap_frac, f64 noise_std, u64 master_seed,
u32 camera count), then per camera an embedded PTYT tensor for the
magnitudes followed by the mask record (f64 fraction, u64 seed,
u32 n_kept, n_kept x u32 kept indices).
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .exceptions import FormatError
from .generator import ACTIVATIONS, GeneratorWeights, Layer
from .optics import (
    CameraArrayGeometry,
    Measurements,
    SamplingMask,
    build_camera_array,
    full_field_geometry,
)

TENSOR_MAGIC = b"PTYT"
WEIGHTS_MAGIC = b"PTYG"
MEASUREMENTS_MAGIC = b"PTYM"

_KIND_CODES = {"linear": 0, "mlp": 1}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}
_ACT_CODES = {name: i for i, name in enumerate(ACTIVATIONS)}
_ACT_NAMES = {v: k for k, v in _ACT_CODES.items()}

_GEOM_DISC_GRID = 0
_GEOM_FULL_FIELD = 1


def _read_exact(f: BinaryIO, count: int, what: str) -> bytes:
    data = f.read(count)
    if len(data) != count:
        raise FormatError(f"truncated file while reading {what}")
    return data


def _write_tensor(f: BinaryIO, arr: np.ndarray) -> None:
    a = np.asarray(arr)
    if np.iscomplexobj(a):
        dtype_code = 1
        payload = np.ascontiguousarray(a.astype(np.complex128)).tobytes()
    else:
        dtype_code = 0
        payload = np.ascontiguousarray(a.astype("<f8")).tobytes()
    f.write(TENSOR_MAGIC)
    f.write(struct.pack("<BB", dtype_code, a.ndim))
    f.write(struct.pack(f"<{a.ndim}I", *a.shape))
    f.write(payload)


def _read_tensor(f: BinaryIO) -> np.ndarray:
    magic = _read_exact(f, 4, "tensor magic")
    if magic != TENSOR_MAGIC:
        raise FormatError(f"bad tensor magic {magic!r}")
    dtype_code, ndim = struct.unpack("<BB", _read_exact(f, 2, "tensor header"))
    dims = struct.unpack(f"<{ndim}I", _read_exact(f, 4 * ndim, "tensor dims"))
    count = int(np.prod(dims)) if ndim else 1
    if dtype_code == 0:
        raw = _read_exact(f, 8 * count, "tensor payload")
        return np.frombuffer(raw, dtype="<f8").reshape(dims).copy()
    if dtype_code == 1:
        raw = _read_exact(f, 16 * count, "tensor payload")
        return np.frombuffer(raw, dtype="<c16").reshape(dims).copy()
    raise FormatError(f"unknown tensor dtype code {dtype_code}")


def save_tensor(path: str | Path, arr: np.ndarray) -> None:
    with open(path, "wb") as f:
        _write_tensor(f, arr)


def load_tensor(path: str | Path) -> np.ndarray:
    with open(path, "rb") as f:
        return _read_tensor(f)


def save_weights(path: str | Path, G: GeneratorWeights) -> None:
    with open(path, "wb") as f:
        f.write(WEIGHTS_MAGIC)
        f.write(struct.pack("<BIII", _KIND_CODES[G.kind], G.latent_dim,
                            G.output_side, len(G.layers)))
        for layer in G.layers:
            out_dim, in_dim = layer.weight.shape
            f.write(struct.pack("<IIB", out_dim, in_dim, _ACT_CODES[layer.activation]))
            f.write(np.ascontiguousarray(layer.weight.T.astype("<f8")).tobytes())
            f.write(np.ascontiguousarray(layer.bias.astype("<f8")).tobytes())


def load_weights(path: str | Path) -> GeneratorWeights:
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, "weights magic")
        if magic != WEIGHTS_MAGIC:
            raise FormatError(f"bad weights magic {magic!r}")
        kind_code, latent_dim, output_side, n_layers = struct.unpack(
            "<BIII", _read_exact(f, 13, "weights header")
        )
        if kind_code not in _KIND_NAMES:
            raise FormatError(f"unknown generator kind code {kind_code}")
        layers = []
        for i in range(n_layers):
            out_dim, in_dim, act_code = struct.unpack(
                "<IIB", _read_exact(f, 9, f"layer {i} header")
            )
            if act_code not in _ACT_NAMES:
                raise FormatError(f"unknown activation code {act_code}")
            w_raw = _read_exact(f, 8 * out_dim * in_dim, f"layer {i} weights")
            w = np.frombuffer(w_raw, dtype="<f8").reshape(in_dim, out_dim).T.copy()
            b_raw = _read_exact(f, 8 * out_dim, f"layer {i} bias")
            b = np.frombuffer(b_raw, dtype="<f8").copy()
            layers.append(Layer(w, b, _ACT_NAMES[act_code]))
        return GeneratorWeights(
            kind=_KIND_NAMES[kind_code],
            latent_dim=latent_dim,
            output_side=output_side,
            layers=layers,
        )


def _geometry_kind(geometry: CameraArrayGeometry) -> int:
    if geometry.grid == 1 and np.all(geometry.pupils == 1.0):
        return _GEOM_FULL_FIELD
    return _GEOM_DISC_GRID


def save_measurements(path: str | Path, m: Measurements) -> None:
    g = m.geometry
    with open(path, "wb") as f:
        f.write(MEASUREMENTS_MAGIC)
        f.write(struct.pack("<IIB", g.image_size, g.grid, _geometry_kind(g)))
        f.write(struct.pack("<dddQI", g.aperture_diameter, g.overlap_frac,
                            m.noise_std, m.master_seed, m.camera_count))
        for cam in range(m.camera_count):
            _write_tensor(f, m.magnitudes[cam])
            mask = m.masks[cam]
            f.write(struct.pack("<dQI", mask.fraction, mask.seed, len(mask.kept)))
            f.write(np.ascontiguousarray(mask.kept.astype("<u4")).tobytes())


def load_measurements(path: str | Path) -> Measurements:
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, "measurements magic")
        if magic != MEASUREMENTS_MAGIC:
            raise FormatError(f"bad measurements magic {magic!r}")
        image_size, grid, geom_kind = struct.unpack(
            "<IIB", _read_exact(f, 9, "measurements header")
        )
        aperture, overlap, noise_std, master_seed, cam_count = struct.unpack(
            "<dddQI", _read_exact(f, 36, "measurements header")
        )
        if geom_kind == _GEOM_FULL_FIELD:
            geometry = full_field_geometry(image_size)
        elif geom_kind == _GEOM_DISC_GRID:
            geometry = build_camera_array(image_size, grid, aperture, overlap)
        else:
            raise FormatError(f"unknown geometry kind {geom_kind}")
        if cam_count != geometry.camera_count:
            raise FormatError(
                f"camera count {cam_count} inconsistent with grid {grid}"
            )
        mags = np.zeros((cam_count, image_size, image_size), dtype=np.float64)
        masks = []
        for cam in range(cam_count):
            tensor = _read_tensor(f)
            if tensor.shape != (image_size, image_size):
                raise FormatError(f"camera {cam} tensor shape {tensor.shape}")
            mags[cam] = tensor.real
            fraction, seed, n_kept = struct.unpack(
                "<dQI", _read_exact(f, 20, f"camera {cam} mask header")
            )
            raw = _read_exact(f, 4 * n_kept, f"camera {cam} mask indices")
            kept = np.frombuffer(raw, dtype="<u4").copy()
            masks.append(SamplingMask(size=image_size, kept=kept,
                                      fraction=fraction, seed=seed))
        return Measurements(
            geometry=geometry,
            magnitudes=mags,
            masks=tuple(masks),
            noise_std=noise_std,
            master_seed=master_seed,
        )


def save_pgm(path: str | Path, image: np.ndarray) -> None:
    """8-bit binary PGM for quick visual checks; display-only quantization."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise FormatError("PGM output requires a 2D image")
    quantized = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + quantized.tobytes())


def save_recon(prefix: str | Path, result) -> tuple[Path, Path]:
    """Write a reconstruction as PTYT plus a text loss-trace sidecar."""
    prefix = Path(prefix)
    tensor_path = prefix.with_suffix(".ptyt")
    sidecar_path = prefix.with_suffix(".loss.csv")
    save_tensor(tensor_path, result.x_hat)
    final = float(result.loss_trace[-1]) if result.steps_run > 0 else result.initial_loss
    lines = [f"steps_run,{result.steps_run}", f"final_loss,{final!r}", "step,loss"]
    lines += [f"{i},{float(v)!r}" for i, v in enumerate(result.loss_trace)]
    sidecar_path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return tensor_path, sidecar_path
