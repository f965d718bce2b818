"""Hybrid damped-Newton / SGD training for small feed-forward networks.

The last layer of an MLP with identity+MSE or softmax+cross-entropy output has
a positive semi-definite Hessian, so it can be updated with an exact, damped
Newton step while the remaining layers use plain SGD.
"""

from .curvature import (CurvatureFactors, LastLayerCurvature, cel_last_curvature,
                        mse_last_curvature, penultimate_relu_factors)
from .data import CsvSchema, Dataset, load_csv, sample_minibatch, split, standardize
from .estimator import DampedNewtonMLPClassifier, DampedNewtonMLPRegressor
from .network import Activation, NetworkConfig, Task, backward, forward, init_params, loss
from .optimizer import (OptimizerConfig, OptimizerKind, SolverStatus, StepReport,
                        damped_newton_last_step, dn_sgd_iteration, sgd_dn_iteration, sgd_step)
from .trainer import MetricsLog, RunConfig, evaluate, train_run

__version__ = "0.1.0"

__all__ = [
    "Activation", "CsvSchema", "CurvatureFactors", "DampedNewtonMLPClassifier",
    "DampedNewtonMLPRegressor", "Dataset", "LastLayerCurvature", "MetricsLog", "NetworkConfig",
    "OptimizerConfig", "OptimizerKind", "RunConfig", "SolverStatus", "StepReport", "Task",
    "backward", "cel_last_curvature", "damped_newton_last_step", "dn_sgd_iteration", "evaluate",
    "forward", "init_params", "load_csv", "loss", "mse_last_curvature", "penultimate_relu_factors",
    "sample_minibatch", "sgd_dn_iteration", "sgd_step", "split", "standardize", "train_run",
]
