"""Feed-forward conditioner networks with exact reverse-mode gradients.

Only the fixed MLP topology is supported: affine layers with one shared
hidden activation and a linear output layer. Inputs may be a single vector
``(in,)`` or a batch ``(n, in)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from src.errors import ConfigurationError, ShapeError
from src.models import Activation

Seed = int | Sequence[int]


@dataclass(frozen=True, eq=False)
class ConditionerNet:
    """Parameters of an MLP; ``weights[l]`` has shape ``(dims[l+1], dims[l])``."""

    layer_dims: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    activation: Activation = Activation.LEAKY_RELU
    negative_slope: float = 0.01

    def __post_init__(self) -> None:
        _check_dims(self.layer_dims)
        n_layers = len(self.layer_dims) - 1
        if len(self.weights) != n_layers or len(self.biases) != n_layers:
            raise ShapeError(
                f"expected {n_layers} weight/bias pairs for dims {self.layer_dims}"
            )
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            expected = (self.layer_dims[l + 1], self.layer_dims[l])
            if w.shape != expected:
                raise ShapeError(f"weight {l} has shape {w.shape}, expected {expected}")
            if b.shape != (self.layer_dims[l + 1],):
                raise ShapeError(f"bias {l} has shape {b.shape}, expected ({expected[0]},)")

    @property
    def in_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def out_dim(self) -> int:
        return self.layer_dims[-1]

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


@dataclass(frozen=True)
class ParamSlot:
    name: str
    shape: tuple[int, ...]
    offset: int

    @property
    def size(self) -> int:
        return int(np.prod(self.shape, dtype=int))


@dataclass(frozen=True, eq=False)
class ParamVector:
    """Flat parameter vector with a named layout to map entries back."""

    values: np.ndarray
    slots: tuple[ParamSlot, ...]

    @classmethod
    def from_arrays(cls, items: Iterable[tuple[str, np.ndarray]]) -> ParamVector:
        slots: list[ParamSlot] = []
        chunks: list[np.ndarray] = []
        offset = 0
        for name, arr in items:
            arr = np.asarray(arr, dtype=np.float64)
            slots.append(ParamSlot(name, tuple(arr.shape), offset))
            chunks.append(arr.ravel())
            offset += arr.size
        values = np.concatenate(chunks) if chunks else np.zeros(0)
        return cls(values, tuple(slots))

    def __len__(self) -> int:
        return self.values.size

    def __getitem__(self, name: str) -> np.ndarray:
        slot = self._slot(name)
        return self.values[slot.offset : slot.offset + slot.size].reshape(slot.shape)

    def names(self) -> list[str]:
        return [s.name for s in self.slots]

    def with_values(self, values: np.ndarray) -> ParamVector:
        values = np.asarray(values, dtype=np.float64)
        if values.shape != self.values.shape:
            raise ShapeError(f"expected {self.values.shape} values, got {values.shape}")
        return ParamVector(values, self.slots)

    def locate(self, index: int) -> tuple[str, tuple[int, ...]]:
        """Map a flat index back to (slot name, array coordinate)."""
        for slot in self.slots:
            if slot.offset <= index < slot.offset + slot.size:
                return slot.name, tuple(int(i) for i in np.unravel_index(index - slot.offset, slot.shape))
        raise IndexError(index)

    def _slot(self, name: str) -> ParamSlot:
        for slot in self.slots:
            if slot.name == name:
                return slot
        raise KeyError(name)


@dataclass(frozen=True, eq=False)
class NetTrace:
    """Forward activations kept for a backward pass."""

    inputs: tuple[np.ndarray, ...]  # input of each affine layer
    pre: tuple[np.ndarray, ...]  # pre-activation of each hidden layer
    output: np.ndarray


# ---- construction ----------------------------------------------------------


def _check_dims(layer_dims: Sequence[int]) -> None:
    if len(layer_dims) < 2:
        raise ConfigurationError(f"layer_dims needs at least input and output: {list(layer_dims)}")
    if any(int(d) != d or d < 1 for d in layer_dims):
        raise ConfigurationError(f"layer_dims must be positive integers: {list(layer_dims)}")


def init_net(
    layer_dims: Sequence[int],
    activation: Activation = Activation.LEAKY_RELU,
    seed: Seed = 0,
    *,
    negative_slope: float = 0.01,
) -> ConditionerNet:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases."""
    _check_dims(layer_dims)
    dims = tuple(int(d) for d in layer_dims)
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return ConditionerNet(dims, tuple(weights), tuple(biases), activation, negative_slope)


def linear_net(weights: Sequence[float], bias: float = 0.0) -> ConditionerNet:
    """Zero-hidden-layer conditioner computing ``w . x + b``."""
    w = np.asarray(weights, dtype=np.float64).reshape(1, -1)
    return ConditionerNet(
        (w.shape[1], 1), (w,), (np.array([float(bias)]),), Activation.IDENTITY
    )


def flatten_net(net: ConditionerNet, prefix: str = "") -> ParamVector:
    return ParamVector.from_arrays(_named_arrays(net.weights, net.biases, prefix))


def unflatten_net(net: ConditionerNet, params: ParamVector, prefix: str = "") -> ConditionerNet:
    """Rebuild ``net`` with the values stored under ``prefix`` in ``params``."""
    n_layers = len(net.weights)
    weights = tuple(params[f"{prefix}W{l}"].copy() for l in range(n_layers))
    biases = tuple(params[f"{prefix}b{l}"].copy() for l in range(n_layers))
    return ConditionerNet(net.layer_dims, weights, biases, net.activation, net.negative_slope)


def _named_arrays(weights, biases, prefix):
    for l, (w, b) in enumerate(zip(weights, biases)):
        yield f"{prefix}W{l}", w
        yield f"{prefix}b{l}", b


# ---- evaluation ------------------------------------------------------------


def _as_batch(net: ConditionerNet, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    batch = x.reshape(1, -1) if single else x
    if batch.ndim != 2 or batch.shape[1] != net.in_dim:
        raise ShapeError(f"net expects inputs of width {net.in_dim}, got shape {x.shape}")
    return batch, single


def _activate(net: ConditionerNet, pre: np.ndarray) -> np.ndarray:
    if net.activation is Activation.LEAKY_RELU:
        return np.where(pre > 0, pre, net.negative_slope * pre)
    if net.activation is Activation.TANH:
        return np.tanh(pre)
    return pre


def _activation_slope(net: ConditionerNet, pre: np.ndarray) -> np.ndarray:
    if net.activation is Activation.LEAKY_RELU:
        return np.where(pre > 0, 1.0, net.negative_slope)
    if net.activation is Activation.TANH:
        return 1.0 - np.tanh(pre) ** 2
    return np.ones_like(pre)


def trace_forward(net: ConditionerNet, batch: np.ndarray) -> NetTrace:
    """Forward pass on a ``(n, in)`` batch, recording what backward needs."""
    inputs = []
    pre_acts = []
    h = batch
    last = len(net.weights) - 1
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        inputs.append(h)
        a = h @ w.T + b
        if l < last:
            pre_acts.append(a)
            h = _activate(net, a)
        else:
            h = a
    return NetTrace(tuple(inputs), tuple(pre_acts), h)


def trace_backward(
    net: ConditionerNet, trace: NetTrace, output_grad: np.ndarray
) -> tuple[list[np.ndarray], list[np.ndarray], np.ndarray]:
    """Gradients of ``sum(output * output_grad)``; parameter grads summed over rows."""
    grad_w: list[np.ndarray] = [None] * len(net.weights)  # type: ignore[list-item]
    grad_b: list[np.ndarray] = [None] * len(net.weights)  # type: ignore[list-item]
    g = output_grad
    for l in range(len(net.weights) - 1, -1, -1):
        grad_w[l] = g.T @ trace.inputs[l]
        grad_b[l] = g.sum(axis=0)
        g = g @ net.weights[l]
        if l > 0:
            g = g * _activation_slope(net, trace.pre[l - 1])
    return grad_w, grad_b, g


def net_forward(net: ConditionerNet, x) -> np.ndarray:
    batch, single = _as_batch(net, x)
    out = trace_forward(net, batch).output
    return out[0] if single else out


def net_backward(net: ConditionerNet, x, output_grad) -> tuple[ParamVector, np.ndarray]:
    """Exact gradients of ``<net(x), output_grad>`` w.r.t. parameters and input."""
    batch, single = _as_batch(net, x)
    grad = np.asarray(output_grad, dtype=np.float64)
    if grad.size != batch.shape[0] * net.out_dim:
        raise ShapeError(f"output_grad has shape {grad.shape}, net output width is {net.out_dim}")
    grad = grad.reshape(batch.shape[0], net.out_dim)
    grad_w, grad_b, grad_x = trace_backward(net, trace_forward(net, batch), grad)
    params = ParamVector.from_arrays(_named_arrays(grad_w, grad_b, ""))
    return params, grad_x[0] if single else grad_x
