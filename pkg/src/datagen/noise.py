"""Latent noise draws for the synthetic SEMs."""

from __future__ import annotations

import numpy as np

from src.flows.base import standard_laplace
from src.models import NoiseKind


def draw_noise(
    rng: np.random.Generator,
    kind: NoiseKind,
    size,
    *,
    dof: float = 3.0,
) -> np.ndarray:
    """Standard Laplace (inverse CDF), standard Gaussian or Student-t(dof)."""
    if kind is NoiseKind.LAPLACE:
        return standard_laplace(rng, size)
    if kind is NoiseKind.GAUSSIAN:
        return rng.standard_normal(size)
    return rng.standard_t(dof, size)


def noise_variance(kind: NoiseKind, dof: float = 3.0) -> float:
    """Variance of one ``draw_noise`` coordinate."""
    if kind is NoiseKind.LAPLACE:
        return 2.0
    if kind is NoiseKind.GAUSSIAN:
        return 1.0
    return dof / (dof - 2.0)
