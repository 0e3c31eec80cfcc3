"""Counterfactuals by abduction, action and prediction."""

from __future__ import annotations

import logging

import numpy as np

from src.errors import ShapeError
from src.flows.model import FlowModel, composed_affine, flow_inverse, forward_levels
from src.models import CounterfactualQuery
from src.queries.interventions import check_target, require_fitted, to_internal_value

logger = logging.getLogger(__name__)


def counterfactual(model: FlowModel, q: CounterfactualQuery) -> np.ndarray:
    """``x_obs`` had x_target been ``value``, in original units.

    The latent of the target is re-solved through the composed transformer
    at the observed predecessors; every other latent is kept. Variables ranked
    before the target keep their observed values.
    """
    require_fitted(model)
    x_obs = np.asarray(q.x_obs, dtype=np.float64)
    if x_obs.shape != (model.d,):
        raise ShapeError(f"x_obs has {x_obs.size} values, model has {model.d} variables")
    check_target(model, q.target)
    j = q.target

    x_int = model.to_internal(x_obs)[None, :]
    z, _ = flow_inverse(model, x_int)
    alpha = to_internal_value(model, j, q.value)
    s_bar, t_bar = composed_affine(model, x_int, j)
    z[:, j] = (alpha - t_bar) * np.exp(-s_bar)

    x_cf = model.to_original(forward_levels(model, z)[-1])[0]
    predecessors = list(model.ordering.predecessors(j))
    x_cf[predecessors] = x_obs[predecessors]
    x_cf[j] = q.value
    logger.debug("counterfactual x%d <- %g: %s", j + 1, q.value, x_cf)
    return x_cf
