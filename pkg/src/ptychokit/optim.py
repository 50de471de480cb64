"""First-order optimizers used by the solvers and decoder training."""

from __future__ import annotations

import numpy as np

from .exceptions import ConfigError


class Adam:
    """Adam with bias correction; state is kept per parameter array."""

    def __init__(
        self,
        shape: tuple[int, ...] | int,
        learning_rate: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.lr = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = np.zeros(shape, dtype=np.float64)
        self.v = np.zeros(shape, dtype=np.float64)

    def step(self, param: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        return param - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class GradientDescent:
    """Plain fixed-step descent, kept as a fallback to Adam."""

    def __init__(self, shape: tuple[int, ...] | int, learning_rate: float):
        self.lr = learning_rate

    def step(self, param: np.ndarray, grad: np.ndarray) -> np.ndarray:
        return param - self.lr * grad


def make_optimizer(
    name: str,
    shape: tuple[int, ...] | int,
    learning_rate: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
):
    if name == "adam":
        return Adam(shape, learning_rate, beta1, beta2, eps)
    if name == "gd":
        return GradientDescent(shape, learning_rate)
    raise ConfigError(f"unknown optimizer {name!r} (expected 'adam' or 'gd')")
