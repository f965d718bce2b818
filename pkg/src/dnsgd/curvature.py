"""Exact last-layer gradient and Hessian of the batch loss.

The last layer's parameters are vectorized as the concatenation of the rows of
``W[L]`` (one row per output node), so the Hessian of the cross-entropy loss
has per-sample block ``(j, k)`` equal to ``p_j (delta_jk - p_k) x x^T``.

Batch quantities are arithmetic means over samples.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatch, EmptyBatch, NonFiniteLoss, WrongActivation
from .linalg import kron
from .network import Activation, Task, forward_batch


@dataclass
class LastLayerCurvature:
    gradient: np.ndarray
    hessian: np.ndarray

    @property
    def dim(self):
        return self.gradient.shape[0]


@dataclass
class CurvatureFactors:
    """Kronecker factors of a single-sample Hessian, ``kron(left, right)``.

    ``partition`` is the softmax normalizer D (classification only) and ``u``
    the vector with ``B = 2 u u^T`` (ReLU penultimate case only).
    """

    left: np.ndarray
    right: np.ndarray
    partition: float = None
    u: np.ndarray = None

    def hessian(self):
        return kron(self.left, self.right)


def _prepare(params, X, Y, config, task):
    if config.task is not task:
        raise DimensionMismatch(f"curvature for {task.value} requested on a {config.task.value} network")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None] if task is Task.REGRESSION else Y[None, :]
    if X.shape[0] == 0:
        raise EmptyBatch("curvature needs at least one sample")
    if X.shape[0] != Y.shape[0]:
        raise DimensionMismatch(f"{X.shape[0]} inputs but {Y.shape[0]} targets")
    if Y.shape[1] != config.layer_sizes[-1]:
        raise DimensionMismatch(f"target width {Y.shape[1]} != n_L = {config.layer_sizes[-1]}")
    trace = forward_batch(params, X, config)
    return trace, Y


def mse_last_curvature(params, X, Y, config):
    """Gradient ``mean 2 (w.x - y) x`` and Hessian ``mean 2 x x^T`` of the squared loss."""
    trace, Y = _prepare(params, X, Y, config, Task.REGRESSION)
    xs = trace[-2]
    m = xs.shape[0]
    residual = trace[-1][:, 0] - Y[:, 0]
    gradient = 2.0 * (residual @ xs) / m
    hessian = 2.0 * (xs.T @ xs) / m
    return LastLayerCurvature(gradient=gradient, hessian=0.5 * (hessian + hessian.T))


def cel_last_curvature(params, X, Y, config):
    """Gradient and Hessian of the softmax cross-entropy w.r.t. the last layer."""
    trace, Y = _prepare(params, X, Y, config, Task.CLASSIFICATION)
    xs, probs = trace[-2], trace[-1]
    if not np.all(np.isfinite(probs)):
        raise NonFiniteLoss("softmax produced non-finite probabilities")
    m, width = xs.shape
    n_out = probs.shape[1]
    gradient = ((probs - Y).T @ xs / m).ravel()
    # S_i = diag(p_i) - p_i p_i^T, then H = mean_i kron(S_i, x_i x_i^T)
    S = np.einsum("ij,jk->ijk", probs, np.eye(n_out)) - np.einsum("ij,ik->ijk", probs, probs)
    hessian = np.einsum("ijk,ia,ib->jakb", S, xs, xs).reshape(n_out * width, n_out * width) / m
    return LastLayerCurvature(gradient=gradient, hessian=0.5 * (hessian + hessian.T))


def last_layer_curvature(params, X, Y, config):
    if config.task is Task.REGRESSION:
        return mse_last_curvature(params, X, Y, config)
    return cel_last_curvature(params, X, Y, config)


def cel_factors(params, x, config):
    """``E``, ``F`` and ``D`` for one input, from max-shifted exponentials.

    ``E[j, j] = e_j (D - e_j)``, ``E[j, k] = -e_j e_k`` and ``F = x x^T / D^2``,
    where ``x`` is the augmented penultimate activation.
    """
    if config.task is not Task.CLASSIFICATION:
        raise DimensionMismatch("cel_factors needs a classification network")
    trace = forward_batch(params, np.asarray(x, dtype=np.float64)[None, :], config)
    xs = trace[-2][0]
    logits = params[-1] @ xs
    exps = np.exp(logits - np.max(logits))
    D = float(np.sum(exps))
    E = softmax_factor(exps)
    F = np.outer(xs, xs) / D ** 2
    return CurvatureFactors(left=E, right=F, partition=D)


def softmax_factor(exps):
    """The matrix ``E`` built from a vector of exponentials."""
    exps = np.asarray(exps, dtype=np.float64)
    D = np.sum(exps)
    E = -np.outer(exps, exps)
    np.fill_diagonal(E, exps * (D - exps))
    return E


def penultimate_relu_factors(params, x, y, config):
    """``B = 2 u u^T`` and ``C = x x^T`` for the ReLU penultimate layer.

    ``u_j = W[L][0, j+1] * relu'(z_j)`` over hidden units j, and ``x`` is the
    augmented input to the penultimate layer (bias component included), so
    ``kron(B, C)`` is the single-sample Hessian of the squared loss with
    respect to the concatenated rows of ``W[L-1]``. The target does not
    enter: the residual multiplies ``relu''``, which vanishes.
    """
    if config.task is not Task.REGRESSION or config.layer_sizes[-1] != 1:
        raise DimensionMismatch("penultimate factors need a single-output regression network")
    if config.n_layers < 2:
        raise DimensionMismatch("penultimate factors need at least one hidden layer")
    if config.hidden_activation is not Activation.RELU:
        raise WrongActivation("penultimate Hessian factorization needs a ReLU hidden layer")
    del y
    trace = forward_batch(params, np.asarray(x, dtype=np.float64)[None, :], config)
    x_prev = trace[-3][0]
    z = params[-2] @ x_prev
    u = params[-1][0, 1:] * (z > 0.0)
    return CurvatureFactors(left=2.0 * np.outer(u, u), right=np.outer(x_prev, x_prev), u=u)


def quadratic_form_identity_check(E, weights_exp, z):
    """Return ``(z^T E z, 1/2 sum_jk e_j e_k (z_j - z_k)^2)``."""
    E = np.asarray(E, dtype=np.float64)
    e = np.asarray(weights_exp, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    n = len(e)
    if E.shape != (n, n) or z.shape != (n,):
        raise DimensionMismatch(f"E {E.shape}, exponentials {e.shape} and z {z.shape} disagree")
    lhs = float(z @ E @ z)
    diff = z[:, None] - z[None, :]
    rhs = float(0.5 * np.sum(np.outer(e, e) * diff ** 2))
    return lhs, rhs
