"""Adam optimizer over flat parameter vectors."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from src.errors import ShapeError
from src.nn.network import ParamVector


@dataclass(frozen=True, eq=False)
class AdamState:
    step_count: int
    m: np.ndarray
    v: np.ndarray
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def fresh(
        cls,
        n_params: int,
        lr: float = 1e-3,
        betas: tuple[float, float] = (0.9, 0.999),
        epsilon: float = 1e-8,
    ) -> AdamState:
        return cls(0, np.zeros(n_params), np.zeros(n_params), lr, betas[0], betas[1], epsilon)

    def with_lr(self, lr: float) -> AdamState:
        return replace(self, lr=lr)


def adam_step(
    state: AdamState, params: ParamVector, grads: ParamVector
) -> tuple[ParamVector, AdamState]:
    """One bias-corrected Adam update, descending along ``grads``."""
    if not (len(params) == len(grads) == state.m.size == state.v.size):
        raise ShapeError(
            f"length mismatch: params={len(params)} grads={len(grads)} moments={state.m.size}"
        )
    g = grads.values
    t = state.step_count + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * g
    v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    updated = params.values - state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return params.with_values(updated), replace(state, step_count=t, m=m, v=v)
