"""Tests for conditioner networks and the Adam optimizer."""

import numpy as np
import pytest

from src.errors import ConfigurationError, ShapeError
from src.models import Activation
from src.nn.adam import AdamState, adam_step
from src.nn.network import (
    ParamVector,
    flatten_net,
    init_net,
    linear_net,
    net_backward,
    net_forward,
    unflatten_net,
)


def _numeric_param_grad(net, x, out_grad, eps=1e-6):
    flat = flatten_net(net)
    grad = np.zeros(len(flat))
    for k in range(len(flat)):
        bumped = []
        for sign in (1.0, -1.0):
            values = flat.values.copy()
            values[k] += sign * eps
            moved = unflatten_net(net, flat.with_values(values))
            bumped.append(np.sum(net_forward(moved, x) * out_grad))
        grad[k] = (bumped[0] - bumped[1]) / (2 * eps)
    return grad


class TestInit:
    def test_weights_within_fan_in_bound(self):
        net = init_net((3, 16, 4, 1), seed=7)
        for w, b in zip(net.weights, net.biases):
            bound = 1.0 / np.sqrt(w.shape[1])
            assert np.all(np.abs(w) <= bound)
            assert np.all(b == 0.0)

    def test_same_seed_same_net(self):
        a = init_net((2, 5, 1), seed=[1, 2, 3])
        b = init_net((2, 5, 1), seed=[1, 2, 3])
        for wa, wb in zip(a.weights, b.weights):
            np.testing.assert_array_equal(wa, wb)

    def test_rejects_degenerate_dims(self):
        with pytest.raises(ConfigurationError):
            init_net((3,))
        with pytest.raises(ConfigurationError):
            init_net((3, 0, 1))

    def test_n_params(self):
        net = init_net((3, 4, 1))
        assert net.n_params == 3 * 4 + 4 + 4 * 1 + 1


class TestForward:
    def test_single_vector_matches_batch(self, rng):
        net = init_net((3, 6, 2), seed=1)
        x = rng.normal(size=(5, 3))
        batch = net_forward(net, x)
        assert batch.shape == (5, 2)
        np.testing.assert_allclose(net_forward(net, x[2]), batch[2])

    def test_linear_net(self):
        net = linear_net([2.0, -1.0], bias=0.5)
        assert net.activation is Activation.IDENTITY
        np.testing.assert_allclose(net_forward(net, [1.0, 3.0]), [0.5])

    def test_wrong_width(self):
        net = init_net((3, 4, 1))
        with pytest.raises(ShapeError):
            net_forward(net, np.zeros((2, 4)))


class TestBackward:
    @pytest.mark.parametrize("activation", list(Activation))
    def test_param_grad_matches_finite_differences(self, rng, activation):
        net = init_net((3, 7, 5, 2), activation, seed=3)
        x = rng.normal(size=(6, 3))
        out_grad = rng.normal(size=(6, 2))
        grads, _ = net_backward(net, x, out_grad)
        np.testing.assert_allclose(
            grads.values, _numeric_param_grad(net, x, out_grad), rtol=1e-5, atol=1e-7
        )

    @pytest.mark.parametrize("seed", range(100))
    def test_random_nets_match_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        hidden = tuple(int(h) for h in rng.integers(2, 7, size=rng.integers(1, 3)))
        dims = (int(rng.integers(1, 4)), *hidden, int(rng.integers(1, 3)))
        activation = list(Activation)[seed % len(Activation)]
        net = init_net(dims, activation, seed=seed)
        x = rng.normal(size=(int(rng.integers(1, 6)), dims[0]))
        out_grad = rng.normal(size=(x.shape[0], dims[-1]))
        grads, _ = net_backward(net, x, out_grad)
        np.testing.assert_allclose(
            grads.values, _numeric_param_grad(net, x, out_grad), rtol=1e-4, atol=1e-7
        )

    def test_input_grad_matches_finite_differences(self, rng):
        net = init_net((3, 8, 1), Activation.TANH, seed=4)
        x = rng.normal(size=3)
        _, grad_x = net_backward(net, x, [1.0])
        eps = 1e-6
        numeric = np.array(
            [
                (net_forward(net, x + eps * e)[0] - net_forward(net, x - eps * e)[0]) / (2 * eps)
                for e in np.eye(3)
            ]
        )
        np.testing.assert_allclose(grad_x, numeric, rtol=1e-6, atol=1e-8)

    def test_output_grad_shape_checked(self):
        net = init_net((2, 3, 1))
        with pytest.raises(ShapeError):
            net_backward(net, np.zeros((4, 2)), np.zeros(3))


class TestParamVector:
    def test_locate(self):
        pv = ParamVector.from_arrays([("a", np.zeros((2, 3))), ("b", np.zeros(4))])
        assert pv.locate(0) == ("a", (0, 0))
        assert pv.locate(5) == ("a", (1, 2))
        assert pv.locate(7) == ("b", (1,))
        with pytest.raises(IndexError):
            pv.locate(10)

    def test_with_values_checks_length(self):
        pv = ParamVector.from_arrays([("a", np.zeros(3))])
        with pytest.raises(ShapeError):
            pv.with_values(np.zeros(4))


class TestAdam:
    def test_first_step_moves_by_lr_against_gradient(self):
        params = ParamVector.from_arrays([("w", np.array([1.0, -2.0, 0.5]))])
        grads = params.with_values(np.array([0.3, -4.0, 1e3]))
        state = AdamState.fresh(3, lr=0.01)
        updated, state = adam_step(state, params, grads)
        np.testing.assert_allclose(updated.values, params.values - 0.01 * np.sign(grads.values), rtol=1e-6)
        assert state.step_count == 1

    def test_minimizes_quadratic(self):
        target = np.array([3.0, -1.0])
        params = ParamVector.from_arrays([("w", np.zeros(2))])
        state = AdamState.fresh(2, lr=0.05)
        for _ in range(2000):
            grads = params.with_values(2.0 * (params.values - target))
            params, state = adam_step(state, params, grads)
        np.testing.assert_allclose(params.values, target, atol=1e-3)

    def test_length_mismatch(self):
        params = ParamVector.from_arrays([("w", np.zeros(2))])
        with pytest.raises(ShapeError):
            adam_step(AdamState.fresh(3), params, params)
