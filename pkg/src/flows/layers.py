"""Affine autoregressive layers.

Within one layer every variable ``j`` is produced as

    y_j = exp(s_j(y_parents)) * u_j + t_j(y_parents)

where the parents are variables of strictly smaller rank, read from the
layer's own output. Roots use learned constants for ``s_j`` and ``t_j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from src.models import ArchitectureConfig
from src.nn.network import ConditionerNet, NetTrace, init_net, trace_forward


@dataclass(frozen=True, eq=False)
class FixedFunction:
    """Non-trainable conditioner wrapping a known mechanism.

    ``fn`` maps a ``(n, k)`` array of parent values to ``n`` outputs.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    name: str = "fixed"


Part = Union[ConditionerNet, FixedFunction, float]


@dataclass(frozen=True, eq=False)
class VariableTransform:
    parents: tuple[int, ...]
    log_scale: Part = 0.0
    shift: Part = 0.0

    @property
    def is_root(self) -> bool:
        return not self.parents

    @property
    def index(self) -> np.ndarray:
        """Parents as an integer index array (valid when empty)."""
        return np.asarray(self.parents, dtype=np.intp)


@dataclass(frozen=True, eq=False)
class AffineLayer:
    transforms: tuple[VariableTransform, ...]

    @property
    def d(self) -> int:
        return len(self.transforms)


def evaluate_part(part: Part, inputs: np.ndarray) -> tuple[np.ndarray, NetTrace | None]:
    """Evaluate ``s_j`` or ``t_j`` on ``(n, k)`` parent values."""
    n = inputs.shape[0]
    if isinstance(part, ConditionerNet):
        trace = trace_forward(part, inputs)
        return trace.output[:, 0], trace
    if isinstance(part, FixedFunction):
        return np.asarray(part.fn(inputs), dtype=np.float64).reshape(n), None
    return np.full(n, float(part)), None


def init_layer(
    parents: Sequence[tuple[int, ...]],
    architecture: ArchitectureConfig,
    *,
    ranks: Sequence[int],
    seed: int,
    layer_index: int,
    additive: bool = False,
) -> AffineLayer:
    """Fresh layer: root constants at zero, MLP conditioners elsewhere.

    Each network is seeded from ``(seed, layer, rank, part)``, so relabelling
    the columns leaves the draw of every position in the ordering unchanged.
    """
    transforms = []
    for j, pa in enumerate(parents):
        if not pa:
            transforms.append(VariableTransform(()))
            continue
        dims = (len(pa), *architecture.hidden_dims, 1)

        def make(part_id: int) -> ConditionerNet:
            return init_net(
                dims,
                architecture.activation,
                seed=[seed, layer_index, ranks[j], part_id],
                negative_slope=architecture.negative_slope,
            )

        log_scale: Part = 0.0 if additive else make(0)
        transforms.append(VariableTransform(tuple(pa), log_scale, make(1)))
    return AffineLayer(tuple(transforms))
