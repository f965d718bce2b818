"""Epoch-based training loop with per-iteration and per-epoch metrics."""

import time
from dataclasses import dataclass, field

import numpy as np

from .data import SamplerState, batches_per_epoch, sample_minibatch
from .exceptions import ConfigError, DimensionMismatch, NonFiniteLoss
from .network import NetworkConfig, Task, check_params, init_params, predict_batch, sample_losses
from .optimizer import OptimizerConfig, iterate


@dataclass(frozen=True)
class RunConfig:
    network: NetworkConfig
    optimizer: OptimizerConfig
    epochs: int = 20
    eval_every: int = None
    """Extra full-data evaluation every k iterations; None means once per epoch."""

    def __post_init__(self):
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise ConfigError(f"epochs must be a positive integer, got {self.epochs}")
        if self.eval_every is not None and self.eval_every < 1:
            raise ConfigError(f"eval_every must be positive, got {self.eval_every}")


@dataclass
class IterationRecord:
    step: int
    epoch: int
    train_batch_loss: float
    elapsed_s: float
    h_max: float = None
    solver_status: str = None
    train_full_loss: float = None
    test_loss: float = None
    accuracy: float = None


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    test_loss: float
    elapsed_s: float
    train_accuracy: float = None
    test_accuracy: float = None


@dataclass
class MetricsLog:
    optimizer: str
    iterations: list = field(default_factory=list)
    epochs: list = field(default_factory=list)

    @property
    def train_losses(self):
        return [r.train_loss for r in self.epochs]

    @property
    def test_losses(self):
        return [r.test_loss for r in self.epochs]

    @property
    def batch_losses(self):
        return [r.train_batch_loss for r in self.iterations]

    @property
    def fallback_count(self):
        return sum(r.solver_status == "fell_back_to_gradient" for r in self.iterations)


def evaluate(params, data, config):
    """Mean loss over ``data`` and, for classification, argmax accuracy.

    Ties in the argmax go to the lowest class index.
    """
    if len(data) == 0:
        raise DimensionMismatch("cannot evaluate on an empty dataset")
    if data.n_features != config.layer_sizes[0]:
        raise DimensionMismatch(f"dataset has {data.n_features} features, network expects {config.layer_sizes[0]}")
    output = predict_batch(params, data.features, config)
    mean_loss = float(np.mean(sample_losses(output, data.target_matrix(), config.task)))
    if config.task is Task.CLASSIFICATION:
        return mean_loss, float(np.mean(np.argmax(output, axis=1) == data.targets))
    return mean_loss, None


def _check_consistent(data, config):
    net = config.network
    if data.n_features != net.layer_sizes[0]:
        raise ConfigError(f"dataset has {data.n_features} features but the network input is {net.layer_sizes[0]}")
    if data.task is not net.task:
        raise ConfigError(f"dataset task {data.task.value} does not match network task {net.task.value}")
    if net.task is Task.CLASSIFICATION and data.class_count != net.layer_sizes[-1]:
        raise ConfigError(f"dataset has {data.class_count} classes but the network has {net.layer_sizes[-1]} outputs")


def train_run(train, test, config, params=None, on_iteration=None):
    """Run ``config.epochs`` epochs of the configured optimizer.

    Initialization and batch order both derive from ``config.optimizer.seed``,
    so runs differing only in optimizer kind see the same starting point and
    the same batches. ``on_iteration`` (if given) is called with each record.

    On a non-finite loss the run stops and NonFiniteLoss is raised with the
    partial log and last finite parameters attached.
    """
    net, opt = config.network, config.optimizer
    _check_consistent(train, config)
    _check_consistent(test, config)
    if opt.batch_size > len(train):
        raise ConfigError(f"batch size {opt.batch_size} exceeds the {len(train)} training samples")
    if params is None:
        params = init_params(net, seed=opt.seed)
    check_params(params, net)

    log = MetricsLog(optimizer=opt.kind.value)
    state = SamplerState(seed=opt.seed)
    per_epoch = batches_per_epoch(len(train), opt.batch_size)
    start = time.monotonic()
    step = 0
    try:
        for epoch in range(1, config.epochs + 1):
            for _ in range(per_epoch):
                batch, state = sample_minibatch(train, opt.batch_size, state)
                new_params, report = iterate(params, batch.inputs, batch.targets, net, opt)
                step += 1
                record = IterationRecord(
                    step=step,
                    epoch=epoch,
                    train_batch_loss=report.batch_loss_before,
                    elapsed_s=time.monotonic() - start,
                    h_max=report.h_max,
                    solver_status=None if report.solver_status is None else report.solver_status.value,
                )
                if not all(np.all(np.isfinite(W)) for W in new_params):
                    log.iterations.append(record)
                    raise NonFiniteLoss(f"parameters became non-finite at step {step}")
                params = new_params
                log.iterations.append(record)
                if config.eval_every and step % config.eval_every == 0:
                    _fill_eval(record, params, train, test, net)
                if on_iteration is not None:
                    on_iteration(record)
            record = log.iterations[-1]
            if record.train_full_loss is None:
                _fill_eval(record, params, train, test, net)
            train_acc = evaluate(params, train, net)[1]
            log.epochs.append(EpochRecord(
                epoch=epoch,
                train_loss=record.train_full_loss,
                test_loss=record.test_loss,
                elapsed_s=time.monotonic() - start,
                train_accuracy=train_acc,
                test_accuracy=record.accuracy,
            ))
    except NonFiniteLoss as exc:
        exc.log, exc.params = log, params
        raise
    return params, log


def _fill_eval(record, params, train, test, net):
    record.train_full_loss = evaluate(params, train, net)[0]
    record.test_loss, record.accuracy = evaluate(params, test, net)
