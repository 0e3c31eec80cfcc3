"""Maximum-likelihood fitting of a flow for a fixed ordering."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from src.errors import NumericError, ShapeError, TrainingDivergedError
from src.flows.model import (
    FlowModel,
    flow_parameters,
    init_flow,
    log_likelihood,
    loglik_and_gradient,
    with_parameters,
)
from src.flows.ordering import CausalOrdering
from src.models import ArchitectureConfig, SchedulerConfig, TrainConfig
from src.nn.adam import AdamState, adam_step
from src.training.data import DataSplit, as_matrix, split_standardize

logger = logging.getLogger(__name__)

# salt mixed into per-epoch shuffle seeds
_SHUFFLE_STREAM = 101


@dataclass
class PlateauScheduler:
    """Multiply the learning rate by ``factor`` once the monitored loss has
    not improved by ``threshold`` for more than ``patience`` epochs."""

    factor: float = 0.1
    patience: int = 10
    threshold: float = 1e-4
    best: float = math.inf
    bad_epochs: int = 0
    events: list[int] = field(default_factory=list)

    @classmethod
    def from_config(cls, config: SchedulerConfig) -> PlateauScheduler:
        return cls(config.factor, config.patience, config.threshold)

    def step(self, epoch: int, loss: float, lr: float) -> float:
        if loss < self.best - self.threshold:
            self.best = loss
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1
        if self.bad_epochs > self.patience:
            self.bad_epochs = 0
            self.events.append(epoch)
            logger.info("plateau at epoch %d: lr %.3g -> %.3g", epoch, lr, lr * self.factor)
            return lr * self.factor
        return lr


@dataclass(frozen=True, eq=False)
class FitResult:
    model: FlowModel
    train_curve: tuple[float, ...]
    best_curve: tuple[float, ...]
    test_loglik: float
    n_train: int
    n_test: int
    lr_history: tuple[float, ...]
    plateau_events: tuple[int, ...]
    split: DataSplit
    architecture: ArchitectureConfig

    @property
    def final_lr(self) -> float:
        return self.lr_history[-1] if self.lr_history else math.nan


def fit_flow(
    data,
    ordering: CausalOrdering,
    config: TrainConfig = TrainConfig(),
    *,
    split: DataSplit | None = None,
    parents: Sequence[tuple[int, ...]] | None = None,
    architecture: ArchitectureConfig | None = None,
) -> FitResult:
    """Fit a flow with ``ordering`` by Adam over shuffled mini-batches.

    ``split`` lets several fits share the same train/test rows; ``parents``
    replaces the full-predecessor conditioning sets (block models).
    Returns the parameters of the final epoch.
    """
    matrix = as_matrix(data)
    if matrix.shape[1] != ordering.d:
        raise ShapeError(f"data has {matrix.shape[1]} columns, ordering has {ordering.d}")
    if split is None:
        split = split_standardize(matrix, config.split_fraction, config.seed)
    architecture = architecture or config.architecture
    scaler = split.scaler

    model = init_flow(
        ordering,
        architecture,
        base_kind=config.base_kind,
        additive=config.additive_only,
        seed=config.seed,
        parents=parents,
        scaler=scaler,
    )
    x_train = scaler.transform(split.train)
    n_train = x_train.shape[0]

    params = flow_parameters(model)
    state = AdamState.fresh(len(params), config.lr, config.betas, config.eps)
    scheduler = PlateauScheduler.from_config(config.scheduler)
    train_curve: list[float] = []
    best_curve: list[float] = []
    lr_history: list[float] = []

    for epoch in range(config.epochs):
        perm = np.random.default_rng([config.seed, _SHUFFLE_STREAM, epoch]).permutation(n_train)
        total = 0.0
        for start in range(0, n_train, config.batch_size):
            batch = x_train[perm[start : start + config.batch_size]]
            try:
                batch_ll, grad = loglik_and_gradient(model, batch, clamp=config.scale_clamp)
            except NumericError as exc:
                raise TrainingDivergedError(epoch) from exc
            if not (math.isfinite(batch_ll) and np.all(np.isfinite(grad.values))):
                raise TrainingDivergedError(epoch)
            params, state = adam_step(state, params, grad.with_values(-grad.values))
            model = with_parameters(model, params)
            total += batch_ll * batch.shape[0]

        epoch_ll = total / n_train + scaler.log_abs_det
        train_curve.append(epoch_ll)
        best_curve.append(max(epoch_ll, best_curve[-1]) if best_curve else epoch_ll)
        state = state.with_lr(scheduler.step(epoch, -epoch_ll, state.lr))
        lr_history.append(state.lr)
        logger.debug("epoch %d: train loglik %.4f, lr %.3g", epoch, epoch_ll, state.lr)

    model = replace(model, fitted=True)
    test_loglik = float(np.mean(log_likelihood(model, split.test)))
    logger.debug("fitted %s: test loglik %.4f", ordering, test_loglik)
    return FitResult(
        model=model,
        train_curve=tuple(train_curve),
        best_curve=tuple(best_curve),
        test_loglik=test_loglik,
        n_train=split.n_train,
        n_test=split.n_test,
        lr_history=tuple(lr_history),
        plateau_events=tuple(scheduler.events),
        split=split,
        architecture=architecture,
    )
