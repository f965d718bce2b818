import itertools

import numpy as np
import pytest

from dnsgd.curvature import (cel_factors, cel_last_curvature, mse_last_curvature,
                             penultimate_relu_factors, quadratic_form_identity_check, softmax_factor)
from dnsgd.exceptions import DimensionMismatch, EmptyBatch, WrongActivation
from dnsgd.linalg import kron, min_eigenvalue
from dnsgd.network import Activation, NetworkConfig, Task, batch_loss, zero_params
from dnsgd.verify import fd_hessian
from oracles import kron_loop


def _one_layer_with_hidden_output(x_hidden):
    """A (1, 1) network whose penultimate activation is (1, x_hidden)."""
    config = NetworkConfig((1, 1))
    return config, zero_params(config), np.array([[x_hidden]])


class TestMSE:
    def test_hessian_single_sample(self):
        config, params, X = _one_layer_with_hidden_output(0.5)
        curv = mse_last_curvature(params, X, [[1.0]], config)
        np.testing.assert_array_equal(curv.hessian, [[2.0, 1.0], [1.0, 0.5]])

    def test_gradient_single_sample(self):
        config, params, X = _one_layer_with_hidden_output(0.5)
        curv = mse_last_curvature(params, X, [[1.0]], config)
        np.testing.assert_array_equal(curv.gradient, [-2.0, -1.0])

    def test_finite_difference_hessian(self, rng):
        config = NetworkConfig((3, 4, 1))
        params = [rng.standard_normal(s) for s in config.shapes]
        X = rng.standard_normal((5, 3))
        Y = rng.standard_normal((5, 1))
        H = mse_last_curvature(params, X, Y, config).hessian
        assert np.max(np.abs(H - fd_hessian(mse_last_curvature, params, X, Y, config))) <= 1e-4

    def test_gradient_matches_loss_differences(self, rng):
        config = NetworkConfig((3, 4, 1))
        params = [rng.standard_normal(s) for s in config.shapes]
        X, Y = rng.standard_normal((6, 3)), rng.standard_normal((6, 1))
        g = mse_last_curvature(params, X, Y, config).gradient
        h = 1e-6
        for i in range(5):
            plus = [W.copy() for W in params]
            minus = [W.copy() for W in params]
            plus[1][0, i] += h
            minus[1][0, i] -= h
            fd = (batch_loss(plus, X, Y, config) - batch_loss(minus, X, Y, config)) / (2 * h)
            assert g[i] == pytest.approx(fd, abs=1e-7)

    def test_psd(self, rng):
        config = NetworkConfig((4, 6, 1))
        params = [rng.standard_normal(s) for s in config.shapes]
        H = mse_last_curvature(params, rng.standard_normal((10, 4)), rng.standard_normal((10, 1)), config).hessian
        assert min_eigenvalue(H) >= -1e-9

    def test_empty_batch(self):
        config = NetworkConfig((2, 1))
        with pytest.raises(EmptyBatch):
            mse_last_curvature(zero_params(config), np.zeros((0, 2)), np.zeros((0, 1)), config)

    def test_wrong_task(self):
        config = NetworkConfig((2, 2), "classification")
        with pytest.raises(DimensionMismatch):
            mse_last_curvature(zero_params(config), np.zeros((1, 2)), np.zeros((1, 1)), config)


class TestCEL:
    def setup_method(self):
        self.config = NetworkConfig((1, 2), "classification")
        self.params = zero_params(self.config)
        self.X = np.array([[0.0]])

    def test_uniform_softmax_factors(self):
        f = cel_factors(self.params, self.X[0], self.config)
        assert f.partition == 2.0
        np.testing.assert_array_equal(f.left, [[1.0, -1.0], [-1.0, 1.0]])
        np.testing.assert_array_equal(f.right, [[0.25, 0.0], [0.0, 0.0]])

    def test_uniform_softmax_hessian(self):
        H = cel_last_curvature(self.params, self.X, [[1.0, 0.0]], self.config).hessian
        expected = np.zeros((4, 4))
        expected[0, 0] = expected[2, 2] = 0.25
        expected[0, 2] = expected[2, 0] = -0.25
        np.testing.assert_array_equal(H, expected)

    def test_uniform_softmax_gradient(self):
        g = cel_last_curvature(self.params, self.X, [[1.0, 0.0]], self.config).gradient
        np.testing.assert_array_equal(g, [-0.5, 0.0, 0.5, 0.0])

    def test_random_two_oracles(self, rng):
        config = NetworkConfig((3, 2, 2), "classification")
        params = [rng.standard_normal(s) for s in config.shapes]
        X = rng.standard_normal((4, 3))
        Y = np.eye(2)[[0, 1, 1, 0]]
        H = cel_last_curvature(params, X, Y, config).hessian
        assert np.max(np.abs(H - fd_hessian(cel_last_curvature, params, X, Y, config))) <= 1e-4
        for x, y in zip(X, Y):
            single = cel_last_curvature(params, x[None, :], y[None, :], config).hessian
            f = cel_factors(params, x, config)
            assert np.max(np.abs(single - kron_loop(f.left, f.right))) <= 1e-10

    def test_psd(self, rng):
        config = NetworkConfig((4, 5, 5), "classification")
        params = [rng.standard_normal(s) for s in config.shapes]
        X = rng.standard_normal((12, 4))
        Y = np.eye(5)[rng.integers(0, 5, 12)]
        assert min_eigenvalue(cel_last_curvature(params, X, Y, config).hessian) >= -1e-9

    def test_shift_invariance_of_factors(self, rng):
        config = NetworkConfig((2, 3), "classification")
        params = [rng.standard_normal(s) for s in config.shapes]
        shifted = [params[0].copy()]
        shifted[0][:, 0] += 40.0  # same offset on every class logit
        x = rng.standard_normal(2)
        a, b = cel_factors(params, x, config), cel_factors(shifted, x, config)
        np.testing.assert_allclose(a.hessian(), b.hessian(), atol=1e-12)

    def test_null_vector(self, rng):
        E = softmax_factor(np.exp(rng.standard_normal(5)))
        assert np.max(np.abs(E @ np.ones(5))) <= 1e-9


class TestPenultimateRelu:
    def test_zero_output_weight(self):
        config = NetworkConfig((2, 1, 1), Task.REGRESSION, Activation.RELU)
        params = [np.array([[0.0, 1.0, 1.0]]), np.array([[0.3, 0.0]])]
        f = penultimate_relu_factors(params, [1.0, 1.0], 0.0, config)
        np.testing.assert_array_equal(f.left, [[0.0]])
        np.testing.assert_array_equal(f.hessian(), np.zeros((3, 3)))

    def test_single_active_unit(self):
        # pre-activation of the hidden unit is 0.5 + 0.5 * 1 > 0 with x^(L-2) = (1, 0.5)
        config = NetworkConfig((1, 1, 1), Task.REGRESSION, Activation.RELU)
        params = [np.array([[0.5, 1.0]]), np.array([[0.0, 1.0]])]
        f = penultimate_relu_factors(params, [0.5], 0.0, config)
        np.testing.assert_array_equal(f.left, [[2.0]])
        np.testing.assert_array_equal(f.right, [[1.0, 0.5], [0.5, 0.25]])
        np.testing.assert_array_equal(f.hessian(), 2.0 * np.outer([1.0, 0.5], [1.0, 0.5]))

    def test_dead_relu(self, rng):
        config = NetworkConfig((2, 4, 1), Task.REGRESSION, Activation.RELU)
        W1 = np.zeros((4, 3))
        W1[:, 0] = -1.0
        params = [W1, rng.standard_normal((1, 5))]
        f = penultimate_relu_factors(params, [0.2, -0.1], 0.0, config)
        np.testing.assert_array_equal(f.left, np.zeros((4, 4)))

    def test_matches_finite_difference_hessian(self, rng):
        config = NetworkConfig((3, 4, 1), Task.REGRESSION, Activation.RELU)
        params = [rng.standard_normal(s) for s in config.shapes]
        x = rng.standard_normal(3)
        y = np.array([[0.7]])
        f = penultimate_relu_factors(params, x, y, config)
        W = params[0]
        h = 1e-4
        H = np.zeros((W.size, W.size))
        for i, j in itertools.product(range(W.size), repeat=2):
            def shifted(di, dj):
                P = W.copy().ravel()
                P[i] += di
                P[j] += dj
                return batch_loss([P.reshape(W.shape), params[1]], x[None, :], y, config)
            H[i, j] = (shifted(h, h) - shifted(h, -h) - shifted(-h, h) + shifted(-h, -h)) / (4 * h * h)
        np.testing.assert_allclose(kron(f.left, f.right), H, atol=1e-5)

    def test_requires_relu(self):
        config = NetworkConfig((2, 2, 1))
        with pytest.raises(WrongActivation):
            penultimate_relu_factors(zero_params(config), [0.0, 0.0], 0.0, config)


class TestQuadraticFormIdentity:
    def test_constant_z(self):
        e = np.array([0.3, 1.2, 2.0])
        lhs, rhs = quadratic_form_identity_check(softmax_factor(e), e, np.full(3, 4.2))
        assert lhs == pytest.approx(0.0, abs=1e-12)
        assert rhs == 0.0

    def test_hand_value(self):
        e = np.ones(2)
        assert quadratic_form_identity_check(softmax_factor(e), e, [1.0, 0.0]) == (1.0, 1.0)

    def test_random_double_loop(self, rng):
        e = np.exp(rng.standard_normal(5))
        z = rng.standard_normal(5)
        E = softmax_factor(e)
        lhs_loop = sum(z[j] * z[k] * E[j, k] for j in range(5) for k in range(5))
        rhs_loop = 0.5 * sum(e[j] * e[k] * (z[j] - z[k]) ** 2 for j in range(5) for k in range(5))
        lhs, rhs = quadratic_form_identity_check(E, e, z)
        assert lhs == pytest.approx(lhs_loop, rel=1e-12)
        assert rhs == pytest.approx(rhs_loop, rel=1e-12)
        assert abs(lhs - rhs) <= 1e-8 * (1 + abs(lhs))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            quadratic_form_identity_check(np.eye(3), np.ones(2), np.ones(3))
