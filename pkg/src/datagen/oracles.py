"""Exact flow models of the synthetic SEMs.

These hand-set models have the SEM mechanisms as conditioners, so their
interventions and counterfactuals are the ground truth the fitted models
are checked against. They are marked fitted and carry no scaler.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit, log_expit

from src.errors import ConfigurationError
from src.flows.base import BaseDistribution
from src.flows.layers import AffineLayer, FixedFunction, VariableTransform
from src.flows.model import FlowModel
from src.flows.ordering import CausalOrdering
from src.models import BaseKind, Family
from src.nn.network import linear_net

_ROOT = VariableTransform(())


def intervention_sem_flow(c1: float, c2: float, base_kind: BaseKind = BaseKind.LAPLACE) -> FlowModel:
    """x3 = x1 + c1 x2^3 + z3 and x4 = c2 x1^2 - x2 + z4 over roots x1, x2."""
    x3 = VariableTransform(
        (0, 1), shift=FixedFunction(lambda v: v[:, 0] + c1 * v[:, 1] ** 3, "x1 + c1*x2^3")
    )
    x4 = VariableTransform(
        (0, 1), shift=FixedFunction(lambda v: c2 * v[:, 0] ** 2 - v[:, 1], "c2*x1^2 - x2")
    )
    layer = AffineLayer((_ROOT, _ROOT, x3, x4))
    return FlowModel(
        CausalOrdering.identity(4), (layer,), BaseDistribution(base_kind), fitted=True
    )


def bivariate_sem_flow(
    family: Family,
    coeff: float = 1.0,
    base_kind: BaseKind = BaseKind.LAPLACE,
) -> FlowModel:
    """x1 = z1, x2 = f(x1, z2) for the families whose f is affine in z2."""
    if family is Family.LINEAR:
        effect = VariableTransform((0,), shift=linear_net([coeff]))
    elif family is Family.NONLINEAR_ADDITIVE:
        effect = VariableTransform(
            (0,), shift=FixedFunction(lambda v: v[:, 0] + coeff * v[:, 0] ** 3, "x1 + a*x1^3")
        )
    elif family is Family.MODULATED_NOISE:
        effect = VariableTransform(
            (0,),
            log_scale=FixedFunction(lambda v: log_expit(v[:, 0]), "log sigmoid(x1)"),
            shift=FixedFunction(
                lambda v: expit(v[:, 0]) + 0.5 * v[:, 0] ** 2, "sigmoid(x1) + x1^2/2"
            ),
        )
    else:
        raise ConfigurationError(f"{family.value} has no exact affine flow")
    return FlowModel(
        CausalOrdering.identity(2),
        (AffineLayer((_ROOT, effect)),),
        BaseDistribution(base_kind),
        fitted=True,
    )


def intervention_sem_expectation(
    c1: float,
    c2: float,
    target: int,
    response: int,
    value: float,
    noise_variance: float = 2.0,
) -> float:
    """Exact E[x_response | do(x_target = value)] for the 4-variable SEM.

    Needs zero-mean symmetric noise; ``noise_variance`` enters through
    E[x1^2] when x1 is not the intervened variable.
    """
    if not (0 <= target < 4 and 0 <= response < 4):
        raise ConfigurationError(f"x{target + 1} or x{response + 1} is outside x1..x4")
    means = [0.0, 0.0, 0.0, 0.0]
    means[target] = value
    x1_sq = value**2 if target == 0 else noise_variance
    x2_cube = value**3 if target == 1 else 0.0
    if target != 2:
        means[2] = means[0] + c1 * x2_cube
    if target != 3:
        means[3] = c2 * x1_sq - means[1]
    return means[response]
