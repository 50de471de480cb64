"""Coherent camera-array imaging: simulation, solvers, metrics, harness."""

__version__ = "0.1.0"

from .exceptions import (
    ConfigError,
    DimensionError,
    FormatError,
    GeometryError,
    NumericsError,
    PtychoError,
)
from .fourier import fft2, fftshift, hadamard, ifft2, ifftshift
from .generator import (
    GeneratorWeights,
    Layer,
    TrainConfig,
    encode,
    fit_latent_leastsq,
    generate,
    generator_vjp,
    linear_generator,
    project_to_range,
    train_autoencoder,
    train_decoder,
)
from .metrics import psnr, ssim
from .optics import (
    CameraArrayGeometry,
    Measurements,
    SamplingMask,
    adjoint_linear,
    build_camera_array,
    camera_field,
    forward_linear,
    full_field_geometry,
    measure,
    measurement_loss,
    measurement_loss_and_gradient,
    pupil_mask,
    residual_gradient,
    sampling_mask,
)
from .rng import SplitMix64, derive_seed
from .solvers import (
    ReconResult,
    SolverConfig,
    error_reduction,
    latent_descent,
    latent_loss,
    latent_loss_grad,
    range_relaxed_descent,
    tv_value_grad,
)

__all__ = [
    "__version__",
    "ConfigError", "DimensionError", "FormatError", "GeometryError",
    "NumericsError", "PtychoError",
    "fft2", "ifft2", "fftshift", "ifftshift", "hadamard",
    "GeneratorWeights", "Layer", "TrainConfig", "encode",
    "fit_latent_leastsq", "generate", "generator_vjp", "linear_generator",
    "project_to_range", "train_autoencoder", "train_decoder",
    "psnr", "ssim",
    "CameraArrayGeometry", "Measurements", "SamplingMask",
    "adjoint_linear", "build_camera_array", "camera_field", "forward_linear",
    "full_field_geometry", "measure", "measurement_loss",
    "measurement_loss_and_gradient", "pupil_mask", "residual_gradient",
    "sampling_mask",
    "SplitMix64", "derive_seed",
    "ReconResult", "SolverConfig", "error_reduction", "latent_descent",
    "latent_loss", "latent_loss_grad", "range_relaxed_descent", "tv_value_grad",
]
