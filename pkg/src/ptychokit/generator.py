"""Fully-connected generative decoders and their reverse-mode gradients.

Two kinds of generator map a latent vector to an image:

- ``linear``: a single affine layer, exactly invertible on its range via
  least squares, used as the ground-truth oracle in recovery tests;
- ``mlp``: a small fully-connected decoder with a sigmoid output layer,
  trained as the decoder half of an autoencoder on an image dataset.

Everything is written in plain numpy with hand-rolled backprop so that
outputs are deterministic functions of the seeds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DimensionError, NumericsError
from .optim import Adam
from .rng import SplitMix64

ACTIVATIONS = ("none", "relu", "sigmoid", "tanh")


def _apply_activation(pre: np.ndarray, kind: str) -> np.ndarray:
    if kind == "none":
        return pre
    if kind == "relu":
        return np.maximum(pre, 0.0)
    if kind == "sigmoid":
        return 1.0 / (1.0 + np.exp(-pre))
    if kind == "tanh":
        return np.tanh(pre)
    raise ConfigError(f"unknown activation {kind!r}")


def _activation_grad(post: np.ndarray, kind: str) -> np.ndarray:
    """Derivative expressed through the post-activation value."""
    if kind == "none":
        return np.ones_like(post)
    if kind == "relu":
        return (post > 0).astype(np.float64)
    if kind == "sigmoid":
        return post * (1.0 - post)
    if kind == "tanh":
        return 1.0 - post * post
    raise ConfigError(f"unknown activation {kind!r}")


@dataclass
class Layer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str


@dataclass
class GeneratorWeights:
    kind: str  # "linear" | "mlp"
    latent_dim: int
    output_side: int
    layers: list[Layer]

    def __post_init__(self):
        if self.kind not in ("linear", "mlp"):
            raise ConfigError(f"unknown generator kind {self.kind!r}")
        if not self.layers:
            raise ConfigError("generator needs at least one layer")
        dim = self.latent_dim
        for i, layer in enumerate(self.layers):
            out_dim, in_dim = layer.weight.shape
            if in_dim != dim:
                raise ConfigError(
                    f"layer {i} expects input dim {in_dim}, chain provides {dim}"
                )
            if layer.bias.shape != (out_dim,):
                raise ConfigError(f"layer {i} bias shape {layer.bias.shape}")
            if layer.activation not in ACTIVATIONS:
                raise ConfigError(f"layer {i} activation {layer.activation!r}")
            dim = out_dim
        if dim != self.output_side**2:
            raise ConfigError(
                f"final layer emits {dim} values, expected {self.output_side}^2"
            )
        if self.kind == "linear":
            if len(self.layers) != 1 or self.layers[0].activation != "none":
                raise ConfigError("linear generator must be a single affine layer")
        if self.kind == "mlp" and self.layers[-1].activation != "sigmoid":
            raise ConfigError("mlp generator must end with a sigmoid layer")


def linear_generator(weight: np.ndarray, bias: np.ndarray) -> GeneratorWeights:
    """Wrap an (n, k) matrix and length-n bias as a linear generator."""
    n, k = weight.shape
    side = int(round(np.sqrt(n)))
    if side * side != n:
        raise ConfigError(f"output length {n} is not a square image")
    return GeneratorWeights(
        kind="linear",
        latent_dim=k,
        output_side=side,
        layers=[Layer(np.asarray(weight, dtype=np.float64),
                      np.asarray(bias, dtype=np.float64), "none")],
    )


def _forward(G: GeneratorWeights, z: np.ndarray) -> list[np.ndarray]:
    """All post-activation values, starting with z itself."""
    acts = [z]
    h = z
    for layer in G.layers:
        h = _apply_activation(layer.weight @ h + layer.bias, layer.activation)
        acts.append(h)
    return acts


def generate(G: GeneratorWeights, z: np.ndarray) -> np.ndarray:
    """Decode a latent vector into an output_side x output_side image."""
    zv = np.asarray(z, dtype=np.float64).ravel()
    if zv.shape != (G.latent_dim,):
        raise DimensionError(
            f"latent vector has length {zv.shape[0]}, expected {G.latent_dim}"
        )
    out = _forward(G, zv)[-1]
    return out.reshape(G.output_side, G.output_side)


def generator_vjp(G: GeneratorWeights, z: np.ndarray, cotangent: np.ndarray) -> np.ndarray:
    """Vector-Jacobian product J(z)^T cotangent by reverse accumulation."""
    zv = np.asarray(z, dtype=np.float64).ravel()
    if zv.shape != (G.latent_dim,):
        raise DimensionError(
            f"latent vector has length {zv.shape[0]}, expected {G.latent_dim}"
        )
    cot = np.asarray(cotangent, dtype=np.float64).ravel()
    n = G.output_side**2
    if cot.shape != (n,):
        raise DimensionError(f"cotangent has length {cot.shape[0]}, expected {n}")
    acts = _forward(G, zv)
    g = cot
    for layer, post in zip(reversed(G.layers), reversed(acts[1:])):
        g = layer.weight.T @ (g * _activation_grad(post, layer.activation))
    return g


@dataclass
class TrainConfig:
    epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 2e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be positive")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ConfigError("adam betas must lie in (0, 1)")


def _init_layers(sizes: list[int], activations: list[str], rng: SplitMix64) -> list[Layer]:
    layers = []
    for (d_in, d_out), act in zip(zip(sizes[:-1], sizes[1:]), activations):
        bound = np.sqrt(6.0 / (d_in + d_out))
        w = (rng.floats(d_out * d_in) * 2.0 - 1.0) * bound
        layers.append(Layer(w.reshape(d_out, d_in), np.zeros(d_out), act))
    return layers


def _batch_forward(layers: list[Layer], x: np.ndarray) -> list[np.ndarray]:
    acts = [x]
    h = x
    for layer in layers:
        h = _apply_activation(h @ layer.weight.T + layer.bias, layer.activation)
        acts.append(h)
    return acts


def _batch_backward(
    layers: list[Layer], acts: list[np.ndarray], grad_out: np.ndarray
) -> tuple[list[tuple[np.ndarray, np.ndarray]], np.ndarray]:
    grads = []
    g = grad_out
    for layer, post, prev in zip(reversed(layers), reversed(acts[1:]), reversed(acts[:-1])):
        g_pre = g * _activation_grad(post, layer.activation)
        grads.append((g_pre.T @ prev, g_pre.sum(axis=0)))
        g = g_pre @ layer.weight
    grads.reverse()
    return grads, g


def train_autoencoder(
    dataset: np.ndarray | list[np.ndarray],
    arch: list[int],
    cfg: TrainConfig,
) -> tuple[list[Layer], GeneratorWeights, float]:
    """Train encoder+decoder under mean-squared reconstruction loss.

    ``arch`` lists the decoder size chain [latent, hidden..., pixels];
    the encoder mirrors it in reverse. Hidden layers are relu, the
    decoder output is sigmoid, the encoder output is linear. Returns
    (encoder layers, decoder, final full-dataset MSE), deterministic in
    ``cfg.seed``.
    """
    images = np.asarray([np.asarray(im, dtype=np.float64) for im in dataset])
    if images.size == 0:
        raise ConfigError("dataset must be nonempty")
    count, side, side2 = images.shape[0], images.shape[1], images.shape[2]
    if side != side2:
        raise ConfigError("training images must be square")
    if len(arch) < 2:
        raise ConfigError("arch needs at least [latent, pixels]")
    if arch[-1] != side * side:
        raise ConfigError(
            f"arch output {arch[-1]} does not chain to {side}x{side} images"
        )
    if any(s < 1 for s in arch):
        raise ConfigError("arch sizes must be positive")

    flat = images.reshape(count, side * side)
    rng = SplitMix64(cfg.seed)

    enc_sizes = list(reversed(arch))
    enc_acts = ["relu"] * (len(enc_sizes) - 2) + ["none"]
    dec_acts = ["relu"] * (len(arch) - 2) + ["sigmoid"]
    encoder_layers = _init_layers(enc_sizes, enc_acts, rng)
    decoder_layers = _init_layers(arch, dec_acts, rng)

    all_layers = encoder_layers + decoder_layers
    opts = [
        (
            Adam(l.weight.shape, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps),
            Adam(l.bias.shape, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps),
        )
        for l in all_layers
    ]

    for _ in range(cfg.epochs):
        order = rng.permutation(count)
        for start in range(0, count, cfg.batch_size):
            batch = flat[order[start : start + cfg.batch_size]]
            acts = _batch_forward(all_layers, batch)
            recon = acts[-1]
            grad_out = 2.0 * (recon - batch) / recon.size
            grads, _ = _batch_backward(all_layers, acts, grad_out)
            for layer, (gw, gb), (ow, ob) in zip(all_layers, grads, opts):
                layer.weight = ow.step(layer.weight, gw)
                layer.bias = ob.step(layer.bias, gb)

    final = _batch_forward(all_layers, flat)[-1]
    final_loss = float(np.mean((final - flat) ** 2))
    decoder = GeneratorWeights(
        kind="mlp", latent_dim=arch[0], output_side=side, layers=decoder_layers
    )
    return encoder_layers, decoder, final_loss


def encode(encoder_layers: list[Layer], image: np.ndarray) -> np.ndarray:
    """Run the encoder half of a trained autoencoder on one image."""
    h = np.asarray(image, dtype=np.float64).ravel()
    for layer in encoder_layers:
        h = _apply_activation(layer.weight @ h + layer.bias, layer.activation)
    return h


def train_decoder(
    dataset: np.ndarray | list[np.ndarray],
    arch: list[int],
    cfg: TrainConfig,
) -> tuple[GeneratorWeights, float]:
    """Train an autoencoder and return (decoder, final training MSE)."""
    _, decoder, final_loss = train_autoencoder(dataset, arch, cfg)
    return decoder, final_loss


def fit_latent_leastsq(G: GeneratorWeights, x: np.ndarray) -> np.ndarray:
    """Exact range projection for a linear generator via normal equations."""
    if G.kind != "linear":
        raise ConfigError("least-squares latent fit requires a linear generator")
    layer = G.layers[0]
    w = layer.weight
    target = np.asarray(x, dtype=np.float64).ravel() - layer.bias
    gram = w.T @ w
    cond = float(np.linalg.cond(gram))
    if not np.isfinite(cond) or cond > 1e12:
        raise NumericsError(
            f"generator matrix is rank deficient (gram condition {cond:.3e})"
        )
    return np.linalg.solve(gram, w.T @ target)


def project_to_range(
    G: GeneratorWeights,
    x: np.ndarray,
    steps: int = 1500,
    learning_rate: float = 0.05,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient-descent projection of an image onto the generator range.

    Minimizes ||G(z) - x||^2 with Adam from a seeded Gaussian start and
    returns (z, G(z)).
    """
    target = np.asarray(x, dtype=np.float64)
    z = SplitMix64(seed).gaussians(G.latent_dim)
    opt = Adam(G.latent_dim, learning_rate)
    for _ in range(steps):
        out = generate(G, z)
        grad = generator_vjp(G, z, 2.0 * (out - target).ravel())
        z = opt.step(z, grad)
    return z, generate(G, z)
