"""Shared fixtures."""

from __future__ import annotations

import numpy as np
import pytest

from src.datagen.generators import generate
from src.datagen.oracles import intervention_sem_flow
from src.models import ArchitectureConfig, Family, SchedulerConfig, SyntheticSpec, TrainConfig

# coefficients of the 4-variable SEM used by the oracle tests
C1, C2 = 0.9, 1.2


@pytest.fixture
def fast_config() -> TrainConfig:
    """A few epochs on a small net: enough to exercise the loop, not to converge."""
    return TrainConfig(
        epochs=5,
        batch_size=32,
        lr=5e-3,
        architecture=ArchitectureConfig(n_layers_flow=2, hidden_dims=(8,)),
        scheduler=SchedulerConfig(patience=2),
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def linear_data() -> np.ndarray:
    return generate(SyntheticSpec(Family.LINEAR, n=200, seed=3)).data


@pytest.fixture
def additive_data() -> np.ndarray:
    return generate(SyntheticSpec(Family.NONLINEAR_ADDITIVE, n=500, seed=11)).data


@pytest.fixture
def sem4_oracle():
    return intervention_sem_flow(C1, C2)


@pytest.fixture
def sem4_data() -> np.ndarray:
    spec = SyntheticSpec(Family.INTERVENTION_SEM, n=300, seed=5, c1=C1, c2=C2)
    return generate(spec).data
