"""Exhaustive search over causal orderings."""

from __future__ import annotations

import itertools
import logging
import math

from src.discovery.direction import Candidate, fit_candidates, fit_meta_dict
from src.errors import DataError, InfeasibleSearchError
from src.flows.ordering import CausalOrdering
from src.models import OrderingReport, TrainConfig
from src.training.data import as_matrix, split_standardize

logger = logging.getLogger(__name__)

DEFAULT_MAX_D = 5


def ordering_search(
    data,
    config: TrainConfig = TrainConfig(),
    max_d: int = DEFAULT_MAX_D,
) -> OrderingReport:
    """Fit one flow per permutation and rank them by held-out log-likelihood.

    Ties keep permutation order (lexicographic in the cause-first labels);
    ``OrderingReport.tied`` flags a tie at the top.
    """
    matrix = as_matrix(data)
    d = matrix.shape[1]
    if d < 2:
        raise DataError(f"ordering search needs at least 2 columns, got {d}")
    if d > max_d:
        raise InfeasibleSearchError(
            f"exhaustive search over {d} variables needs {math.factorial(d)} fits (d!); "
            f"max_d is {max_d}"
        )
    candidates = [
        Candidate(str(ordering), ordering)
        for ordering in map(CausalOrdering.from_order, itertools.permutations(range(d)))
    ]
    split = split_standardize(matrix, config.split_fraction, config.seed)
    logger.info("searching %d orderings of %d variables", len(candidates), d)
    scores = fit_candidates(matrix, candidates, config, split)
    ranked = sorted(
        zip(candidates, scores),
        key=lambda item: item[1][0],
        reverse=True,
    )
    return OrderingReport(
        ranking=tuple((c.ordering, score) for c, (score, _) in ranked),
        fit_meta=fit_meta_dict(config, split, {c.label: a for c, (_, a) in ranked}),
    )
