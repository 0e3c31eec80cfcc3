"""Factorial base densities of the flows."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from src.models import BaseKind

_LOG_2 = math.log(2.0)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
# keeps the inverse CDF finite at the ends of [0, 1)
_U_TINY = np.finfo(np.float64).tiny


def laplace_inverse_cdf(u: np.ndarray) -> np.ndarray:
    """Standard Laplace quantile function."""
    u = np.clip(u, _U_TINY, 1.0 - np.finfo(np.float64).epsneg)
    return np.where(u < 0.5, np.log(2.0 * u), -np.log(2.0 - 2.0 * u))


def standard_laplace(rng: np.random.Generator, size) -> np.ndarray:
    return laplace_inverse_cdf(rng.random(size))


@dataclass(frozen=True)
class BaseDistribution:
    """Isotropic, zero-location, unit-scale Laplace or Gaussian."""

    kind: BaseKind = BaseKind.LAPLACE

    def log_prob(self, z: np.ndarray) -> np.ndarray:
        """Log-density summed over the last axis."""
        z = np.asarray(z, dtype=np.float64)
        if self.kind is BaseKind.LAPLACE:
            return -np.abs(z).sum(axis=-1) - z.shape[-1] * _LOG_2
        return -0.5 * (z * z).sum(axis=-1) - z.shape[-1] * _HALF_LOG_2PI

    def grad_log_prob(self, z: np.ndarray) -> np.ndarray:
        if self.kind is BaseKind.LAPLACE:
            return -np.sign(z)
        return -z

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind is BaseKind.LAPLACE:
            return standard_laplace(rng, size)
        return rng.standard_normal(size)

    def entropy(self, d: int) -> float:
        """Differential entropy of the d-dimensional density."""
        if self.kind is BaseKind.LAPLACE:
            return d * (1.0 + _LOG_2)
        return d * (0.5 + _HALF_LOG_2PI)
