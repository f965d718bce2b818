"""Update rules: plain SGD and the two hybrid damped-Newton/SGD iterations.

The hybrids update the last layer with

    theta_last <- theta_last - (H + (alpha + H_max) I)^{-1} g

where ``H_max`` is the largest (signed) entry of the last-layer Hessian, and
every earlier layer with an SGD step of rate ``learning_rate``. DN-SGD does
the Newton step first, SGD-DN does the SGD step first; each sub-step sees the
parameters left by the previous one.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .curvature import last_layer_curvature
from .exceptions import ConfigError, DimensionMismatch, EmptyBatch, NotPositiveDefinite
from .linalg import cholesky_solve, max_element
from .network import batch_loss, copy_params, loss_and_grads


class OptimizerKind(str, enum.Enum):
    SGD = "sgd"
    DN_SGD = "dn-sgd"
    SGD_DN = "sgd-dn"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        key = _ALIASES.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ConfigError(f"unknown optimizer {value!r}") from None


_ALIASES = {"qn-sgd": "dn-sgd", "sgd-qn": "sgd-dn", "dnsgd": "dn-sgd", "sgddn": "sgd-dn"}


class SolverStatus(str, enum.Enum):
    OK = "ok"
    FELL_BACK_TO_GRADIENT = "fell_back_to_gradient"


@dataclass(frozen=True)
class OptimizerConfig:
    kind: OptimizerKind = OptimizerKind.SGD
    learning_rate: float = 0.01
    damping: float = 0.0
    batch_size: int = 200
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", OptimizerKind.parse(self.kind))
        # zero is allowed: it freezes every SGD-updated layer
        if not self.learning_rate >= 0:
            raise ConfigError(f"learning rate must be nonnegative, got {self.learning_rate}")
        if not self.damping >= 0:
            raise ConfigError(f"damping must be nonnegative, got {self.damping}")
        if int(self.batch_size) != self.batch_size or self.batch_size < 1:
            raise ConfigError(f"batch size must be a positive integer, got {self.batch_size}")


@dataclass
class StepReport:
    batch_loss_before: float = None
    h_max: float = None
    newton_step_norm: float = None
    solver_status: SolverStatus = None


def sgd_step(params, grads, learning_rate, layers=None):
    """Return ``params - learning_rate * grads`` on the selected layer indices.

    Unselected layers are returned as the same (unmodified) arrays.
    """
    if len(params) != len(grads):
        raise DimensionMismatch(f"{len(params)} parameter layers but {len(grads)} gradients")
    selected = range(len(params)) if layers is None else set(layers)
    out = []
    for l, (W, G) in enumerate(zip(params, grads)):
        if l in selected:
            if W.shape != G.shape:
                raise DimensionMismatch(f"layer {l + 1}: weights {W.shape} vs gradient {G.shape}")
            out.append(W - learning_rate * G)
        else:
            out.append(W)
    return out


def damped_newton_last_step(params, curv, damping, learning_rate=None):
    """Apply one damped Newton step to the last layer.

    If the shifted Hessian is not numerically positive definite (only possible
    when ``damping == 0`` and the Hessian is essentially null) the step falls
    back to ``-learning_rate * g`` and reports FELL_BACK_TO_GRADIENT. Without a
    learning rate the failure propagates.
    """
    W = params[-1]
    g, H = curv.gradient, curv.hessian
    if g.shape != (W.size,) or H.shape != (W.size, W.size):
        raise DimensionMismatch(f"curvature of dim {g.shape[0]} for a last layer of {W.size} parameters")
    h_max = max_element(H)
    shift = damping + h_max
    try:
        step = cholesky_solve(H + shift * np.eye(W.size), g)
        status = SolverStatus.OK
    except NotPositiveDefinite:
        if learning_rate is None:
            raise
        step = learning_rate * g
        status = SolverStatus.FELL_BACK_TO_GRADIENT
    new = list(params)
    new[-1] = W - step.reshape(W.shape)
    report = StepReport(h_max=h_max, newton_step_norm=float(np.linalg.norm(step)), solver_status=status)
    return new, report


def _front_layers(params):
    return range(len(params) - 1)


def _front_sgd(params, X, Y, net_config, learning_rate):
    if len(params) == 1:
        return params
    _, grads = loss_and_grads(params, X, Y, net_config)
    return sgd_step(params, grads, learning_rate, _front_layers(params))


def _newton(params, X, Y, net_config, opt_config):
    curv = last_layer_curvature(params, X, Y, net_config)
    return damped_newton_last_step(params, curv, opt_config.damping, opt_config.learning_rate)


def dn_sgd_iteration(params, X, Y, net_config, opt_config):
    """Damped Newton on the last layer, then SGD on the front layers."""
    before = batch_loss(params, X, Y, net_config)
    params, report = _newton(params, X, Y, net_config, opt_config)
    params = _front_sgd(params, X, Y, net_config, opt_config.learning_rate)
    report.batch_loss_before = before
    return params, report


def sgd_dn_iteration(params, X, Y, net_config, opt_config):
    """SGD on the front layers, then damped Newton on the last layer."""
    before, grads = loss_and_grads(params, X, Y, net_config)
    if len(params) > 1:
        params = sgd_step(params, grads, opt_config.learning_rate, _front_layers(params))
    params, report = _newton(params, X, Y, net_config, opt_config)
    report.batch_loss_before = before
    return params, report


def sgd_iteration(params, X, Y, net_config, opt_config):
    before, grads = loss_and_grads(params, X, Y, net_config)
    return sgd_step(params, grads, opt_config.learning_rate), StepReport(batch_loss_before=before)


_ITERATIONS = {
    OptimizerKind.SGD: sgd_iteration,
    OptimizerKind.DN_SGD: dn_sgd_iteration,
    OptimizerKind.SGD_DN: sgd_dn_iteration,
}


def iterate(params, X, Y, net_config, opt_config):
    """One optimizer iteration on the batch ``(X, Y)``; never mutates ``params``."""
    if np.atleast_2d(X).shape[0] == 0:
        raise EmptyBatch("cannot iterate on an empty batch")
    return _ITERATIONS[opt_config.kind](copy_params(params), X, Y, net_config, opt_config)
