"""Synthetic SEM families with known ground truth.

Every generator is a pure function of its ``SyntheticSpec``: the same spec
always yields the same matrix.
"""

from __future__ import annotations

import logging
from typing import Callable

import numpy as np
from scipy.special import expit

from src.datagen.noise import draw_noise
from src.errors import ConfigurationError
from src.flows.ordering import CausalOrdering
from src.models import Family, GeneratedDataset, SyntheticSpec

logger = logging.getLogger(__name__)

COEFF_RANGE = (0.5, 1.5)
HIGHDIM_BLOCK = 10

Mechanism = Callable[[np.ndarray, np.ndarray, float], np.ndarray]

_MECHANISMS: dict[Family, Mechanism] = {}


def register_mechanism(family: Family):
    """Decorator registering ``f(x1, z2, coeff) -> x2`` for a bivariate family."""

    def decorator(fn: Mechanism) -> Mechanism:
        _MECHANISMS[family] = fn
        return fn

    return decorator


@register_mechanism(Family.LINEAR)
def _linear(x1, z2, coeff):
    return coeff * x1 + z2


@register_mechanism(Family.NONLINEAR_ADDITIVE)
def _nonlinear_additive(x1, z2, coeff):
    return x1 + coeff * x1**3 + z2


@register_mechanism(Family.MODULATED_NOISE)
def _modulated_noise(x1, z2, coeff):
    return expit(x1) + 0.5 * x1**2 + expit(x1) * z2


@register_mechanism(Family.SIGMOID_NONLINEAR_NOISE)
def _sigmoid_nonlinear_noise(x1, z2, coeff):
    return expit(expit(coeff * x1) + z2)


def mechanism(family: Family) -> Mechanism:
    if family not in _MECHANISMS:
        raise ConfigurationError(f"{family.value} is not a bivariate family")
    return _MECHANISMS[family]


def _require(spec: SyntheticSpec, *families: Family) -> None:
    if spec.family not in families:
        allowed = ", ".join(f.value for f in families)
        raise ConfigurationError(f"family {spec.family.value} not handled here (expected {allowed})")


def generate_bivariate(spec: SyntheticSpec) -> GeneratedDataset:
    """x1 = z1, x2 = f(x1, z2); columns swapped when ``flip_direction``."""
    _require(spec, *_MECHANISMS)
    rng = np.random.default_rng(spec.seed)
    z = draw_noise(rng, spec.noise_kind, (spec.n, 2), dof=spec.dof)
    x1 = z[:, 0]
    x2 = mechanism(spec.family)(x1, z[:, 1], spec.coeff)
    data = np.column_stack([x1, x2])
    ordering = CausalOrdering.identity(2)
    if spec.flip_direction:
        data = data[:, ::-1].copy()
        ordering = CausalOrdering.from_order([1, 0])
    return GeneratedDataset(data, ordering, spec.to_dict())


# ---- high-dimensional pair -------------------------------------------------


def _form_sum_all(x1, z_i):
    return expit(expit(x1.sum(axis=1)) + z_i)


def _form_sum_first(x1, z_i):
    return expit(expit(x1[:, :5].sum(axis=1)) + z_i)


def _form_powers(x1, z_i):
    powers = np.arange(1, x1.shape[1] - 4)
    return expit((expit(x1[:, 5:]) ** powers).sum(axis=1) + z_i)


_FORMS = {1: _form_sum_all, 2: _form_sum_first, 3: _form_powers}


def generate_multivariate_pair(spec: SyntheticSpec) -> GeneratedDataset:
    """x1 in R^10 with i.i.d. noise entries, x2 in R^10 with x2_i = g_i(x1, z_i).

    Each g_i is one of three forms drawn uniformly from ``spec.forms``
    (default all three). Columns 1-10 hold the cause block unless
    ``flip_direction``.
    """
    _require(spec, Family.HIGHDIM_PAIR)
    rng = np.random.default_rng(spec.seed)
    forms = spec.forms or tuple(_FORMS)
    assigned = [int(f) for f in rng.choice(forms, size=HIGHDIM_BLOCK)]
    x1 = draw_noise(rng, spec.noise_kind, (spec.n, HIGHDIM_BLOCK), dof=spec.dof)
    z = draw_noise(rng, spec.noise_kind, (spec.n, HIGHDIM_BLOCK), dof=spec.dof)
    x2 = np.column_stack([_FORMS[f](x1, z[:, i]) for i, f in enumerate(assigned)])

    cause = tuple(range(HIGHDIM_BLOCK))
    effect = tuple(range(HIGHDIM_BLOCK, 2 * HIGHDIM_BLOCK))
    data = np.hstack([x1, x2])
    if spec.flip_direction:
        data = np.hstack([x2, x1])
        cause, effect = effect, cause
    ordering = CausalOrdering.from_order([*cause, *effect])
    params = {**spec.to_dict(), "assigned_forms": assigned}
    return GeneratedDataset(data, ordering, params, blocks=(cause, effect))


# ---- intervention SEM ------------------------------------------------------


def intervention_coefficients(spec: SyntheticSpec) -> tuple[float, float]:
    """(c1, c2) from the spec, or drawn from U[0.5, 1.5] with a stream of its own."""
    rng = np.random.default_rng([spec.seed, 1])
    drawn = rng.uniform(*COEFF_RANGE, size=2)
    c1 = float(spec.c1) if spec.c1 is not None else float(drawn[0])
    c2 = float(spec.c2) if spec.c2 is not None else float(drawn[1])
    return c1, c2


def generate_intervention_sem(spec: SyntheticSpec) -> GeneratedDataset:
    """x1 = z1, x2 = z2, x3 = x1 + c1 x2^3 + z3, x4 = c2 x1^2 - x2 + z4."""
    _require(spec, Family.INTERVENTION_SEM)
    c1, c2 = intervention_coefficients(spec)
    rng = np.random.default_rng(spec.seed)
    z = draw_noise(rng, spec.noise_kind, (spec.n, 4), dof=spec.dof)
    x1, x2 = z[:, 0], z[:, 1]
    x3 = x1 + c1 * x2**3 + z[:, 2]
    x4 = c2 * x1**2 - x2 + z[:, 3]
    params = {**spec.to_dict(), "c1": c1, "c2": c2}
    return GeneratedDataset(
        np.column_stack([x1, x2, x3, x4]), CausalOrdering.identity(4), params
    )


# ---- dispatch ---------------------------------------------------------------


def generate(spec: SyntheticSpec) -> GeneratedDataset:
    if spec.family is Family.HIGHDIM_PAIR:
        dataset = generate_multivariate_pair(spec)
    elif spec.family is Family.INTERVENTION_SEM:
        dataset = generate_intervention_sem(spec)
    else:
        dataset = generate_bivariate(spec)
    logger.debug("generated %s: %s", spec.family.value, dataset.data.shape)
    return dataset
