"""Likelihood-ratio direction tests between two variables or two blocks."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from joblib import Parallel, delayed

from src.errors import DataError, ShapeError, TrainingDivergedError
from src.flows.ordering import CausalOrdering, block_conditioning_sets
from src.models import ArchitectureConfig, DirectionReport, TrainConfig
from src.training.data import DataSplit, as_matrix, split_standardize
from src.training.fit import fit_flow

logger = logging.getLogger(__name__)

MIN_ROWS = 10


@dataclass(frozen=True)
class Candidate:
    """One hypothesis to fit: an ordering plus optional block parents."""

    label: str
    ordering: CausalOrdering
    parents: tuple[tuple[int, ...], ...] | None = None


def _fit_one(
    matrix: np.ndarray,
    candidate: Candidate,
    config: TrainConfig,
    split: DataSplit,
    architecture: ArchitectureConfig,
) -> float:
    try:
        result = fit_flow(
            matrix,
            candidate.ordering,
            config,
            split=split,
            parents=candidate.parents,
            architecture=architecture,
        )
    except TrainingDivergedError as exc:
        raise TrainingDivergedError(exc.epoch, direction=candidate.label) from exc
    return result.test_loglik


def fit_candidates(
    matrix: np.ndarray,
    candidates: Sequence[Candidate],
    config: TrainConfig,
    split: DataSplit,
) -> list[tuple[float, int]]:
    """Best held-out log-likelihood of every candidate over all architectures.

    Returns ``(test_loglik, architecture_index)`` per candidate, in input
    order. All fits share ``split`` and run in a joblib pool of
    ``config.n_jobs`` workers.
    """
    architectures = config.candidate_architectures
    jobs = [(c, a) for c in range(len(candidates)) for a in range(len(architectures))]
    scores = Parallel(n_jobs=config.n_jobs, prefer="processes")(
        delayed(_fit_one)(matrix, candidates[c], config, split, architectures[a])
        for c, a in jobs
    )
    best: list[tuple[float, int]] = [(-np.inf, -1)] * len(candidates)
    for (c, a), score in zip(jobs, scores):
        # first architecture wins ties
        if score > best[c][0]:
            best[c] = (score, a)
    for candidate, (score, a) in zip(candidates, best):
        logger.info("%s: test loglik %.4f (architecture %d)", candidate.label, score, a)
    return best


def fit_meta_dict(config: TrainConfig, split: DataSplit, chosen: dict[str, int]) -> dict:
    return {
        "seed": config.seed,
        "config_digest": config.digest(),
        "n_train": split.n_train,
        "n_test": split.n_test,
        "architecture_index": chosen,
    }


def _direction_report(
    matrix: np.ndarray,
    forward: Candidate,
    backward: Candidate,
    config: TrainConfig,
) -> DirectionReport:
    split = split_standardize(matrix, config.split_fraction, config.seed)
    (ll_fwd, a_fwd), (ll_bwd, a_bwd) = fit_candidates(matrix, [forward, backward], config, split)
    return DirectionReport(
        loglik_forward=ll_fwd,
        loglik_backward=ll_bwd,
        threshold=config.decision_threshold,
        fit_meta=fit_meta_dict(config, split, {forward.label: a_fwd, backward.label: a_bwd}),
    )


def likelihood_ratio_bivariate(data, config: TrainConfig = TrainConfig()) -> DirectionReport:
    """R = mean test log-lik under x1 -> x2 minus that under x2 -> x1."""
    matrix = as_matrix(data)
    if matrix.shape[1] != 2:
        raise ShapeError(f"expected 2 columns, got {matrix.shape[1]}")
    if matrix.shape[0] < MIN_ROWS:
        raise DataError(f"need at least {MIN_ROWS} rows, got {matrix.shape[0]}")
    report = _direction_report(
        matrix,
        Candidate("x1->x2", CausalOrdering.identity(2)),
        Candidate("x2->x1", CausalOrdering.from_order([1, 0])),
        config,
    )
    logger.info("R = %.4f -> %s", report.ratio, report.decision.value)
    return report


def _as_block(data) -> np.ndarray:
    block = np.asarray(data, dtype=np.float64)
    return block[:, None] if block.ndim == 1 else block


def group_direction(data_x1, data_x2, config: TrainConfig = TrainConfig()) -> DirectionReport:
    """Direction test between two blocks of variables.

    Every variable of the effect block conditions on the whole cause block
    and on nothing inside its own block.
    """
    x1, x2 = _as_block(data_x1), _as_block(data_x2)
    if x1.shape[0] != x2.shape[0]:
        raise DataError(f"blocks have {x1.shape[0]} and {x2.shape[0]} rows")
    matrix = as_matrix(np.hstack([x1, x2]))
    if x1.shape[1] < 1 or x2.shape[1] < 1:
        raise ShapeError("each block needs at least one column")
    first = tuple(range(x1.shape[1]))
    second = tuple(range(x1.shape[1], matrix.shape[1]))
    fwd_ordering, fwd_parents = block_conditioning_sets([first, second])
    bwd_ordering, bwd_parents = block_conditioning_sets([second, first])
    report = _direction_report(
        matrix,
        Candidate("x1->x2", fwd_ordering, fwd_parents),
        Candidate("x2->x1", bwd_ordering, bwd_parents),
        config,
    )
    logger.info("group R = %.4f -> %s", report.ratio, report.decision.value)
    return report
