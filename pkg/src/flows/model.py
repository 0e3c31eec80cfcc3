"""Stacked affine autoregressive flows sharing one causal ordering.

``flow_forward`` and ``flow_inverse`` work in the model's internal
(standardized) units; ``log_likelihood`` and ``sample`` work in original
data units and account for the stored scaler.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from src.errors import ConfigurationError, NumericError, ShapeError, StateError
from src.flows.base import BaseDistribution
from src.flows.layers import (
    AffineLayer,
    FixedFunction,
    Part,
    VariableTransform,
    evaluate_part,
    init_layer,
)
from src.flows.ordering import CausalOrdering
from src.flows.scaler import Scaler
from src.models import ArchitectureConfig, BaseKind
from src.nn.network import (
    ConditionerNet,
    NetTrace,
    ParamVector,
    flatten_net,
    trace_backward,
    unflatten_net,
)

logger = logging.getLogger(__name__)

_PARTS = ("log_scale", "shift")


@dataclass(frozen=True, eq=False)
class FlowModel:
    ordering: CausalOrdering
    layers: tuple[AffineLayer, ...]
    base: BaseDistribution = BaseDistribution()
    scaler: Scaler | None = None
    additive: bool = False
    fitted: bool = False

    def __post_init__(self) -> None:
        if not self.layers:
            raise ConfigurationError("a flow needs at least one layer")
        d = self.ordering.d
        for l, layer in enumerate(self.layers):
            if layer.d != d:
                raise ConfigurationError(f"layer {l} has {layer.d} variables, ordering has {d}")
            for j, vt in enumerate(layer.transforms):
                rank = self.ordering.ranks[j]
                if any(self.ordering.ranks[p] >= rank for p in vt.parents):
                    raise ConfigurationError(
                        f"layer {l}: x{j + 1} conditions on a variable that is not its predecessor"
                    )
        if self.scaler is not None and self.scaler.d != d:
            raise ConfigurationError(f"scaler has {self.scaler.d} columns, model has {d}")

    @property
    def d(self) -> int:
        return self.ordering.d

    def to_internal(self, x: np.ndarray) -> np.ndarray:
        return x if self.scaler is None else self.scaler.transform(x)

    def to_original(self, x: np.ndarray) -> np.ndarray:
        return x if self.scaler is None else self.scaler.inverse_transform(x)


def init_flow(
    ordering: CausalOrdering,
    architecture: ArchitectureConfig = ArchitectureConfig(),
    *,
    base_kind: BaseKind = BaseKind.LAPLACE,
    additive: bool = False,
    seed: int = 0,
    parents: Sequence[tuple[int, ...]] | None = None,
    scaler: Scaler | None = None,
) -> FlowModel:
    """Freshly initialised flow; ``parents`` overrides the full-predecessor sets."""
    if parents is None:
        parents = ordering.conditioning_sets()
    layers = tuple(
        init_layer(
            parents,
            architecture,
            ranks=ordering.ranks,
            seed=seed,
            layer_index=l,
            additive=additive,
        )
        for l in range(architecture.n_layers_flow)
    )
    return FlowModel(ordering, layers, BaseDistribution(base_kind), scaler, additive)


# ---- helpers -----------------------------------------------------------------


def _as_batch(model: FlowModel, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    batch = x.reshape(1, -1) if single else x
    if batch.ndim != 2 or batch.shape[1] != model.d:
        raise ShapeError(f"model has {model.d} variables, got input of shape {x.shape}")
    return batch, single


def _check_finite(values: np.ndarray, message: str, layer: int, variable: int) -> None:
    if not np.all(np.isfinite(values)):
        raise NumericError(message, layer=layer, variable=variable)


def _scale_shift(vt: VariableTransform, inputs: np.ndarray, additive: bool):
    s, s_trace = (
        (np.zeros(inputs.shape[0]), None)
        if additive
        else evaluate_part(vt.log_scale, inputs)
    )
    t, t_trace = evaluate_part(vt.shift, inputs)
    return s, t, s_trace, t_trace


def _affine_step(model, l, j, vt, inputs, u):
    s, t, _, _ = _scale_shift(vt, inputs, model.additive)
    with np.errstate(over="ignore", invalid="ignore"):
        y = np.exp(s) * u + t
    _check_finite(y, "non-finite value in forward pass", l, j)
    return y


def _affine_step_inverse(model, l, j, vt, inputs, y):
    s, t, _, _ = _scale_shift(vt, inputs, model.additive)
    with np.errstate(over="ignore", invalid="ignore"):
        u = (y - t) * np.exp(-s)
    _check_finite(u, "non-finite value in inverse pass", l, j)
    return u


# ---- forward -------------------------------------------------------------------


def forward_levels(
    model: FlowModel,
    z: np.ndarray,
    *,
    pin: int | None = None,
    pin_value: np.ndarray | float | None = None,
    zero_parametrized: bool = False,
) -> list[np.ndarray]:
    """Rank-major forward pass returning every layer's output.

    ``levels[0]`` is ``z`` and ``levels[l + 1]`` the output of layer ``l``.
    A pinned variable takes ``pin_value`` as its final value, or with
    ``zero_parametrized`` the value its own chain produces when every
    conditioner of that variable is fed zeros. Its per-layer intermediates
    are then recovered by inverting the final value with the actual
    predecessors, so descendants see the composed transformer.
    """
    n_layers = len(model.layers)
    levels = [z.copy()] + [np.zeros_like(z) for _ in range(n_layers)]
    for j in model.ordering.order:
        if j == pin:
            if zero_parametrized:
                final = levels[0][:, j]
                for l, layer in enumerate(model.layers):
                    vt = layer.transforms[j]
                    zeros = np.zeros((z.shape[0], len(vt.parents)))
                    final = _affine_step(model, l, j, vt, zeros, final)
            else:
                final = np.broadcast_to(np.asarray(pin_value, dtype=np.float64), (z.shape[0],))
            levels[n_layers][:, j] = final
            for l in range(n_layers - 1, -1, -1):
                vt = model.layers[l].transforms[j]
                levels[l][:, j] = _affine_step_inverse(
                    model, l, j, vt, levels[l + 1][:, vt.index], levels[l + 1][:, j]
                )
            continue
        for l, layer in enumerate(model.layers):
            vt = layer.transforms[j]
            levels[l + 1][:, j] = _affine_step(
                model, l, j, vt, levels[l + 1][:, vt.index], levels[l][:, j]
            )
    return levels


def flow_forward(model: FlowModel, z) -> np.ndarray:
    """x = T(z) in internal units."""
    batch, single = _as_batch(model, z)
    if not np.all(np.isfinite(batch)):
        raise NumericError("non-finite latent input")
    x = forward_levels(model, batch)[-1]
    return x[0] if single else x


# ---- inverse -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _LayerTrace:
    index: int
    y: np.ndarray  # layer output, input of the inverse step
    u: np.ndarray  # layer input, output of the inverse step
    s: np.ndarray  # (n, d) log-scales actually applied
    s_active: np.ndarray  # (n, d) 1 where the clamp did not bind
    net_traces: dict


def _inverse_pass(model: FlowModel, x: np.ndarray, clamp: float | None = None):
    n, d = x.shape
    y = x
    logdet = np.zeros(n)
    traces: list[_LayerTrace] = []
    for l in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[l]
        u = np.empty_like(y)
        s_all = np.empty_like(y)
        active = np.ones_like(y)
        net_traces = {}
        for j, vt in enumerate(layer.transforms):
            inputs = y[:, vt.index]
            s, t, s_trace, t_trace = _scale_shift(vt, inputs, model.additive)
            if clamp is not None:
                active[:, j] = (np.abs(s) < clamp).astype(np.float64)
                s = np.clip(s, -clamp, clamp)
            with np.errstate(over="ignore", invalid="ignore"):
                u[:, j] = (y[:, j] - t) * np.exp(-s)
            _check_finite(u[:, j], "non-finite value in inverse pass", l, j)
            s_all[:, j] = s
            net_traces[j] = (inputs, s_trace, t_trace)
            logdet -= s
        traces.append(_LayerTrace(l, y, u, s_all, active, net_traces))
        y = u
    return y, logdet, traces


def flow_inverse(model: FlowModel, x) -> tuple[np.ndarray, np.ndarray | float]:
    """z = T^-1(x) and log|det J_{T^-1}(x)| in internal units."""
    batch, single = _as_batch(model, x)
    if not np.all(np.isfinite(batch)):
        raise NumericError("non-finite observation")
    z, logdet, _ = _inverse_pass(model, batch)
    if single:
        return z[0], float(logdet[0])
    return z, logdet


def inverse_levels(model: FlowModel, x: np.ndarray) -> list[np.ndarray]:
    """Per-layer values of ``x`` under the inverse; same layout as ``forward_levels``."""
    z, _, traces = _inverse_pass(model, x)
    levels = [z] + [None] * len(model.layers)
    for trace in traces:
        levels[trace.index + 1] = trace.y
    return levels


def composed_affine(model: FlowModel, x: np.ndarray, j: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed ``(s, t)`` of variable ``j`` across the whole stack.

    ``x`` is an internal-unit batch whose predecessors of ``j`` hold their
    final values; ``x_j = exp(s) * z_j + t`` for the composed flow.
    """
    batch, _ = _as_batch(model, x)
    levels = inverse_levels(model, batch)
    s_bar = np.zeros(batch.shape[0])
    t_bar = np.zeros(batch.shape[0])
    for l, layer in enumerate(model.layers):
        vt = layer.transforms[j]
        s, t, _, _ = _scale_shift(vt, levels[l + 1][:, vt.index], model.additive)
        t_bar = np.exp(s) * t_bar + t
        s_bar = s_bar + s
    return s_bar, t_bar


def zero_context_inverse(model: FlowModel, j: int, value: np.ndarray) -> np.ndarray:
    """Invert variable ``j``'s chain with every conditioner fed zeros."""
    u = np.atleast_1d(np.asarray(value, dtype=np.float64))
    for l in range(len(model.layers) - 1, -1, -1):
        vt = model.layers[l].transforms[j]
        zeros = np.zeros((u.shape[0], len(vt.parents)))
        u = _affine_step_inverse(model, l, j, vt, zeros, u)
    return u


# ---- likelihood ----------------------------------------------------------------


def log_likelihood(model: FlowModel, x) -> np.ndarray | float:
    """Exact log-density in original data units (per row for a batch)."""
    batch, single = _as_batch(model, x)
    internal = model.to_internal(batch)
    if not np.all(np.isfinite(internal)):
        raise NumericError("non-finite observation")
    z, logdet, _ = _inverse_pass(model, internal)
    ll = model.base.log_prob(z) + logdet
    if model.scaler is not None:
        ll = ll + model.scaler.log_abs_det
    return float(ll[0]) if single else ll


# ---- parameters ----------------------------------------------------------------


def _learnable(model: FlowModel, vt: VariableTransform, part_name: str) -> bool:
    if part_name == "log_scale" and model.additive:
        return False
    part = getattr(vt, part_name)
    if isinstance(part, ConditionerNet):
        return True
    if isinstance(part, FixedFunction):
        return False
    return vt.is_root


def _slot_prefix(l: int, j: int, part_name: str) -> str:
    return f"L{l}.x{j + 1}.{part_name}"


def _iter_learnable(model: FlowModel):
    for l, layer in enumerate(model.layers):
        for j, vt in enumerate(layer.transforms):
            for part_name in _PARTS:
                if _learnable(model, vt, part_name):
                    yield l, j, vt, part_name, getattr(vt, part_name)


def flow_parameters(model: FlowModel) -> ParamVector:
    items = []
    for l, j, _, part_name, part in _iter_learnable(model):
        prefix = _slot_prefix(l, j, part_name)
        if isinstance(part, ConditionerNet):
            pv = flatten_net(part, prefix + ".")
            items.extend((slot.name, pv[slot.name]) for slot in pv.slots)
        else:
            items.append((prefix, np.asarray(float(part))))
    return ParamVector.from_arrays(items)


def with_parameters(model: FlowModel, params: ParamVector) -> FlowModel:
    """Copy of ``model`` carrying the values in ``params``."""
    layers = []
    for l, layer in enumerate(model.layers):
        transforms = []
        for j, vt in enumerate(layer.transforms):
            updated: dict[str, Part] = {}
            for part_name in _PARTS:
                part = getattr(vt, part_name)
                if not _learnable(model, vt, part_name):
                    updated[part_name] = part
                    continue
                prefix = _slot_prefix(l, j, part_name)
                if isinstance(part, ConditionerNet):
                    updated[part_name] = unflatten_net(part, params, prefix + ".")
                else:
                    updated[part_name] = float(params[prefix])
            transforms.append(VariableTransform(vt.parents, **updated))
        layers.append(AffineLayer(tuple(transforms)))
    return replace(model, layers=tuple(layers))


# ---- gradients -----------------------------------------------------------------


def _backprop_part(part, trace: NetTrace | None, grad: np.ndarray, prefix: str, out: dict):
    """Accumulate parameter grads of one part; return grad w.r.t. its inputs or None."""
    if isinstance(part, ConditionerNet):
        grad_w, grad_b, grad_x = trace_backward(part, trace, grad[:, None])
        for i, (gw, gb) in enumerate(zip(grad_w, grad_b)):
            out[f"{prefix}.W{i}"] = gw
            out[f"{prefix}.b{i}"] = gb
        return grad_x
    out[prefix] = np.asarray(grad.sum())
    return None


def loglik_and_gradient(
    model: FlowModel, x_internal: np.ndarray, clamp: float | None = None
) -> tuple[float, ParamVector]:
    """Mean internal-unit log-likelihood of a batch and its exact gradient.

    ``clamp`` bounds every log-scale to ``[-clamp, clamp]`` (training only);
    clamped entries pass no gradient.
    """
    n = x_internal.shape[0]
    z, logdet, traces = _inverse_pass(model, x_internal, clamp)
    mean_ll = float((model.base.log_prob(z) + logdet).mean())

    grads: dict[str, np.ndarray] = {}
    g_u = model.base.grad_log_prob(z) / n
    for trace in reversed(traces):
        l = trace.index
        layer = model.layers[l]
        g_y = g_u * np.exp(-trace.s)
        for j, vt in enumerate(layer.transforms):
            inputs, s_trace, t_trace = trace.net_traces[j]
            e = np.exp(-trace.s[:, j])
            g_t = -g_u[:, j] * e
            g_s = (-g_u[:, j] * trace.u[:, j] - 1.0 / n) * trace.s_active[:, j]
            for part_name, g_part, part_trace in (
                ("log_scale", g_s, s_trace),
                ("shift", g_t, t_trace),
            ):
                if part_name == "log_scale" and model.additive:
                    continue
                part = getattr(vt, part_name)
                if isinstance(part, FixedFunction):
                    if vt.parents:
                        raise StateError(
                            f"no gradient through fixed conditioner {part.name!r} of x{j + 1}"
                        )
                    continue
                if not _learnable(model, vt, part_name):
                    continue
                grad_x = _backprop_part(part, part_trace, g_part, _slot_prefix(l, j, part_name), grads)
                if grad_x is not None:
                    g_y[:, vt.index] += grad_x
        g_u = g_y

    layout = flow_parameters(model)
    return mean_ll, ParamVector.from_arrays((name, grads[name]) for name in layout.names())


def loglik_gradient(model: FlowModel, batch) -> ParamVector:
    """Gradient of the mean original-unit log-likelihood over ``batch``."""
    data, _ = _as_batch(model, batch)
    if data.shape[0] == 0:
        raise ShapeError("empty batch")
    internal = model.to_internal(data)
    if not np.all(np.isfinite(internal)):
        raise NumericError("non-finite observation")
    _, grad = loglik_and_gradient(model, internal)
    return grad


# ---- sampling ------------------------------------------------------------------


def sample(model: FlowModel, n: int, seed: int = 0) -> np.ndarray:
    """``n`` draws from the model in original data units."""
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    rng = np.random.default_rng(seed)
    z = model.base.sample(rng, (n, model.d))
    return model.to_original(forward_levels(model, z)[-1])
