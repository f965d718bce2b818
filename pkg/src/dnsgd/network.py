"""Fully connected feed-forward network with the bias folded into the weights.

Layer ``l`` holds a matrix ``W[l]`` of shape ``(n_l, n_{l-1} + 1)``; column 0 is
the bias. Every activation fed into a layer is augmented with a leading 1.
Hidden layers use a sigmoid or ReLU; the output layer is the identity for
regression and a softmax for classification.

Parameters and gradients are plain lists of 2-D numpy arrays.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DimensionMismatch, NonFiniteLoss

LOG_FLOOR = 1e-300


class Task(str, enum.Enum):
    REGRESSION = "regression"
    CLASSIFICATION = "classification"


class Activation(str, enum.Enum):
    SIGMOID = "sigmoid"
    RELU = "relu"


@dataclass(frozen=True)
class NetworkConfig:
    layer_sizes: tuple
    task: Task = Task.REGRESSION
    hidden_activation: Activation = Activation.SIGMOID

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(int(n) for n in self.layer_sizes))
        object.__setattr__(self, "task", Task(self.task))
        object.__setattr__(self, "hidden_activation", Activation(self.hidden_activation))
        sizes = self.layer_sizes
        if len(sizes) < 2:
            raise ConfigError("a network needs at least an input and an output layer")
        if any(n < 1 for n in sizes):
            raise ConfigError(f"layer sizes must be positive, got {sizes}")
        if self.task is Task.REGRESSION and sizes[-1] != 1:
            raise ConfigError("regression networks must have a single output node")
        if self.task is Task.CLASSIFICATION and sizes[-1] < 2:
            raise ConfigError("classification networks need at least two output nodes")

    @property
    def n_layers(self):
        """Number of weight layers ``L``."""
        return len(self.layer_sizes) - 1

    @property
    def shapes(self):
        s = self.layer_sizes
        return [(s[l], s[l - 1] + 1) for l in range(1, len(s))]

    @property
    def last_layer_size(self):
        """Number of parameters in the last layer, ``n_L * (n_{L-1} + 1)``."""
        rows, cols = self.shapes[-1]
        return rows * cols


def init_params(config, seed=0):
    """Uniform ``[-r, r]`` initialization with ``r = 1/sqrt(fan_in + 1)``."""
    rng = np.random.default_rng(seed)
    params = []
    for rows, cols in config.shapes:
        r = 1.0 / np.sqrt(cols)
        params.append(rng.uniform(-r, r, size=(rows, cols)))
    return params


def zero_params(config):
    return [np.zeros(shape) for shape in config.shapes]


def check_params(params, config):
    if len(params) != config.n_layers:
        raise DimensionMismatch(f"expected {config.n_layers} weight matrices, got {len(params)}")
    for l, (W, shape) in enumerate(zip(params, config.shapes)):
        if np.shape(W) != shape:
            raise DimensionMismatch(f"layer {l + 1} has shape {np.shape(W)}, expected {shape}")


def copy_params(params):
    return [W.copy() for W in params]


def flatten(params):
    """``theta``: the concatenation of each layer's rows (i.e. ``vec(W^T)``)."""
    return np.concatenate([W.ravel() for W in params])


def unflatten(theta, config):
    out, offset = [], 0
    for rows, cols in config.shapes:
        out.append(np.asarray(theta[offset:offset + rows * cols], dtype=np.float64).reshape(rows, cols))
        offset += rows * cols
    if offset != len(theta):
        raise DimensionMismatch(f"theta has {len(theta)} entries, network needs {offset}")
    return out


def sigmoid(z):
    # split by sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def relu(z):
    return np.maximum(z, 0.0)


def softmax(logits):
    """Row-wise softmax with max-logit subtraction."""
    logits = np.atleast_2d(logits)
    shifted = logits - np.max(logits, axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=1, keepdims=True)


def augment(X):
    """Prepend a column of ones."""
    X = np.atleast_2d(X)
    return np.hstack([np.ones((X.shape[0], 1)), X])


def _hidden(config):
    return sigmoid if config.hidden_activation is Activation.SIGMOID else relu


def _hidden_derivative(config, a):
    # derivative from the post-activation value; ReLU'(0) is taken as 0
    if config.hidden_activation is Activation.SIGMOID:
        return a * (1.0 - a)
    return (a > 0.0).astype(np.float64)


def forward_batch(params, X, config):
    """Row-wise forward pass over a batch.

    Returns ``[x0, ..., xL]`` where ``x0 .. x_{L-1}`` are augmented with a
    leading column of ones and ``xL`` is the output (identity or softmax).
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != config.layer_sizes[0]:
        raise DimensionMismatch(f"input width {X.shape[1]} != n_0 = {config.layer_sizes[0]}")
    act = _hidden(config)
    trace = [augment(X)]
    for l, W in enumerate(params):
        z = trace[-1] @ W.T
        if l < len(params) - 1:
            trace.append(augment(act(z)))
        elif config.task is Task.CLASSIFICATION:
            trace.append(softmax(z))
        else:
            trace.append(z)
    return trace


def forward(params, x, config):
    """Single-sample forward pass returning 1-D activation vectors."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatch("forward expects a single input vector")
    return [a[0] for a in forward_batch(params, x[None, :], config)]


def predict_batch(params, X, config):
    return forward_batch(params, X, config)[-1]


def sample_losses(output, targets, task):
    """Per-sample losses for a batch of outputs (rows) and targets (rows)."""
    output = np.atleast_2d(output)
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if output.shape != targets.shape:
        raise DimensionMismatch(f"output shape {output.shape} != target shape {targets.shape}")
    if Task(task) is Task.REGRESSION:
        # overflow is reported as NonFiniteLoss below
        with np.errstate(over="ignore", invalid="ignore"):
            losses = np.sum((output - targets) ** 2, axis=1)
    else:
        picked = np.where(targets > 0, output, 1.0)
        if np.any(picked <= LOG_FLOOR):
            raise NonFiniteLoss("log argument underflowed in cross-entropy loss")
        losses = -np.sum(targets * np.log(picked), axis=1)
    if not np.all(np.isfinite(losses)):
        raise NonFiniteLoss("loss is not finite")
    return losses


def loss(trace, target, task):
    """Squared error (no 1/2 factor) or cross-entropy of a single sample."""
    target = np.atleast_1d(np.asarray(target, dtype=np.float64))
    return float(sample_losses(np.atleast_1d(trace[-1])[None, :], target[None, :], task)[0])


def batch_loss(params, X, Y, config):
    """Mean loss over a batch."""
    return float(np.mean(sample_losses(predict_batch(params, X, config), Y, config.task)))


def output_delta(output, targets, task):
    """Derivative of the per-sample loss with respect to the last pre-activation."""
    if Task(task) is Task.REGRESSION:
        return 2.0 * (output - targets)
    return output - targets


def backward_batch(params, trace, Y, config):
    """Gradients of the batch-mean loss for every layer."""
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    m = Y.shape[0]
    if trace[-1].shape != Y.shape:
        raise DimensionMismatch(f"targets of shape {Y.shape} do not match outputs {trace[-1].shape}")
    delta = output_delta(trace[-1], Y, config.task)
    grads = [None] * len(params)
    for l in range(len(params) - 1, -1, -1):
        grads[l] = delta.T @ trace[l] / m
        if l > 0:
            delta = (delta @ params[l][:, 1:]) * _hidden_derivative(config, trace[l][:, 1:])
    return grads


def backward(params, trace, target, config):
    """Per-layer gradients of a single-sample loss, given its forward trace."""
    batch_trace = [np.atleast_1d(a)[None, :] for a in trace]
    target = np.atleast_1d(np.asarray(target, dtype=np.float64))
    return backward_batch(params, batch_trace, target[None, :], config)


def loss_and_grads(params, X, Y, config):
    trace = forward_batch(params, X, config)
    value = float(np.mean(sample_losses(trace[-1], Y, config.task)))
    return value, backward_batch(params, trace, Y, config)
