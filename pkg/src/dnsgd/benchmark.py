"""Synthetic benchmarks and the three-optimizer comparison."""

from dataclasses import dataclass

from .data import make_blobs_benchmark, make_regression_benchmark, split, standardize
from .network import NetworkConfig, Task
from .optimizer import OptimizerConfig, OptimizerKind
from .trainer import RunConfig, train_run

ALL_KINDS = (OptimizerKind.SGD, OptimizerKind.DN_SGD, OptimizerKind.SGD_DN)


@dataclass(frozen=True)
class BenchmarkSpec:
    task: Task
    n_train: int
    n_test: int
    layer_sizes: tuple
    batch_size: int
    learning_rate: float
    damping: float
    epochs: int


REGRESSION = BenchmarkSpec(Task.REGRESSION, 1000, 250, (10, 5, 1), 50, 0.01, 0.0, 5)
CLASSIFICATION = BenchmarkSpec(Task.CLASSIFICATION, 2000, 500, (10, 6, 2), 200, 0.01, 0.01, 5)
BENCHMARKS = {Task.REGRESSION: REGRESSION, Task.CLASSIFICATION: CLASSIFICATION}


def synthetic_datasets(task, seed=0, n_train=None, n_test=None):
    """Standardized ``(train, test)`` for a synthetic benchmark task."""
    spec = BENCHMARKS[Task(task)]
    n_train = spec.n_train if n_train is None else n_train
    n_test = spec.n_test if n_test is None else n_test
    if spec.task is Task.REGRESSION:
        full = make_regression_benchmark(n_train + n_test, seed=seed)
    else:
        full = make_blobs_benchmark(n_train + n_test, separation=2.0, seed=seed)
    train, test = split(full, n_test, seed=seed)
    train, test, _ = standardize(train, test)
    return train, test


def compare_optimizers(train, test, network, learning_rate, damping, batch_size, epochs, seed,
                       kinds=ALL_KINDS):
    """Train one run per optimizer kind from the same initialization and batch order.

    Returns ``{kind: (params, log)}`` in the order of ``kinds``.
    """
    results = {}
    for kind in kinds:
        config = RunConfig(network, OptimizerConfig(kind, learning_rate, damping, batch_size, seed), epochs)
        results[OptimizerKind.parse(kind)] = train_run(train, test, config)
    return results


def run_benchmark(task, seed=0):
    spec = BENCHMARKS[Task(task)]
    train, test = synthetic_datasets(task, seed)
    network = NetworkConfig(spec.layer_sizes, spec.task)
    return compare_optimizers(train, test, network, spec.learning_rate, spec.damping,
                              spec.batch_size, spec.epochs, seed)
