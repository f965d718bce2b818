"""Dataset ingestion, standardization, splitting and mini-batch sampling."""

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import (BadSplitSize, BatchTooLarge, DimensionMismatch, EmptyFile,
                         MissingColumn, ParseError)
from .network import Task

STD_FLOOR = 1e-12


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus regression targets or integer class indices."""

    features: np.ndarray
    targets: np.ndarray
    task: Task
    class_count: int = None
    feature_names: tuple = ()
    class_labels: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "task", Task(self.task))
        X = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        object.__setattr__(self, "features", X)
        if self.task is Task.CLASSIFICATION:
            y = np.asarray(self.targets, dtype=np.int64)
            k = self.class_count if self.class_count is not None else int(y.max()) + 1
            if len(y) and (y.min() < 0 or y.max() >= k):
                raise DimensionMismatch(f"class indices must lie in [0, {k})")
            object.__setattr__(self, "class_count", int(k))
        else:
            y = np.asarray(self.targets, dtype=np.float64)
        object.__setattr__(self, "targets", y)
        if X.shape[0] != y.shape[0]:
            raise DimensionMismatch(f"{X.shape[0]} feature rows but {y.shape[0]} targets")

    def __len__(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    def target_matrix(self, rows=None):
        """Targets as network outputs: a column for regression, one-hot rows otherwise."""
        y = self.targets if rows is None else self.targets[rows]
        if self.task is Task.REGRESSION:
            return y[:, None]
        return one_hot(y, self.class_count)

    def subset(self, rows):
        return replace(self, features=self.features[rows], targets=self.targets[rows])


def one_hot(indices, class_count):
    indices = np.asarray(indices, dtype=np.int64)
    out = np.zeros((len(indices), class_count))
    out[np.arange(len(indices)), indices] = 1.0
    return out


@dataclass(frozen=True)
class CsvSchema:
    target: str
    task: Task = Task.REGRESSION
    categorical: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "task", Task(self.task))
        object.__setattr__(self, "categorical", tuple(self.categorical))


def _sort_key(value):
    try:
        return (0, float(value), value)
    except ValueError:
        return (1, 0.0, value)


def load_csv(path, schema):
    """Read a headered CSV into a Dataset.

    Categorical feature columns are one-hot expanded in place (levels sorted);
    classification targets are mapped to contiguous indices in sorted label
    order. Empty numeric cells are a ParseError.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]
    if not rows:
        raise EmptyFile(f"{path} is empty")
    header, body = [h.strip() for h in rows[0]], rows[1:]
    if not body:
        raise EmptyFile(f"{path} has a header but no data rows")
    for name in (schema.target, *schema.categorical):
        if name not in header:
            raise MissingColumn(f"column {name!r} not found in {path}")
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", row=i)

    columns = {name: [row[j].strip() for row in body] for j, name in enumerate(header)}
    categorical = set(schema.categorical)
    blocks, names = [], []
    for name in header:
        if name == schema.target:
            continue
        values = columns[name]
        if name in categorical:
            levels = sorted(set(values), key=_sort_key)
            index = {v: k for k, v in enumerate(levels)}
            blocks.append(one_hot([index[v] for v in values], len(levels)))
            names.extend(f"{name}={v}" for v in levels)
        else:
            blocks.append(_parse_numeric(values, name)[:, None])
            names.append(name)
    features = np.hstack(blocks) if blocks else np.zeros((len(body), 0))

    raw = columns[schema.target]
    if schema.task is Task.REGRESSION:
        return Dataset(features, _parse_numeric(raw, schema.target), Task.REGRESSION,
                       feature_names=tuple(names))
    labels = tuple(sorted(set(raw), key=_sort_key))
    index = {v: k for k, v in enumerate(labels)}
    targets = np.array([index[v] for v in raw], dtype=np.int64)
    return Dataset(features, targets, Task.CLASSIFICATION, class_count=len(labels),
                   feature_names=tuple(names), class_labels=labels)


def _parse_numeric(values, column):
    out = np.empty(len(values))
    for i, v in enumerate(values):
        try:
            out[i] = float(v)
        except ValueError:
            raise ParseError(f"cannot parse {v!r} as a number", row=i + 2, column=column) from None
        if not math.isfinite(out[i]):
            raise ParseError(f"non-finite value {v!r}", row=i + 2, column=column)
    return out


@dataclass(frozen=True)
class StandardizationStats:
    mean: np.ndarray
    std: np.ndarray
    target_mean: float = None
    target_std: float = None

    def transform_features(self, X):
        X = np.asarray(X, dtype=np.float64)
        out = np.zeros_like(X)
        live = self.std >= STD_FLOOR
        out[:, live] = (X[:, live] - self.mean[live]) / self.std[live]
        return out

    def transform_targets(self, y):
        if self.target_mean is None:
            return y
        if self.target_std < STD_FLOOR:
            return np.zeros_like(y, dtype=np.float64)
        return (y - self.target_mean) / self.target_std

    def inverse_targets(self, y):
        if self.target_mean is None or self.target_std < STD_FLOOR:
            return y if self.target_mean is None else np.full_like(y, self.target_mean)
        return y * self.target_std + self.target_mean

    def apply(self, data):
        return replace(data, features=self.transform_features(data.features),
                       targets=self.transform_targets(data.targets))


def fit_standardization(data):
    """Column means and population standard deviations of a training set."""
    X = data.features
    stats = dict(mean=X.mean(axis=0), std=X.std(axis=0))
    if data.task is Task.REGRESSION:
        stats.update(target_mean=float(data.targets.mean()), target_std=float(data.targets.std()))
    return StandardizationStats(**stats)


def standardize(train, other):
    """Z-score both datasets with statistics of ``train`` only."""
    if train.n_features != other.n_features:
        raise DimensionMismatch(f"feature widths differ: {train.n_features} vs {other.n_features}")
    stats = fit_standardization(train)
    return stats.apply(train), stats.apply(other), stats


def split(data, test_size, seed=0):
    """Seeded random partition into ``(train, test)`` with ``len(test) == test_size``."""
    m = len(data)
    if int(test_size) != test_size or not 0 < test_size < m:
        raise BadSplitSize(f"test size must be an integer in (0, {m}), got {test_size}")
    perm = np.random.default_rng(seed).permutation(m)
    test_rows = np.sort(perm[:test_size])
    train_rows = np.sort(perm[test_size:])
    return data.subset(train_rows), data.subset(test_rows)


@dataclass(frozen=True)
class SamplerState:
    """Position in the epoch-shuffled index stream."""

    seed: int = 0
    epoch: int = 0
    position: int = 0

    def permutation(self, m):
        return np.random.default_rng([self.seed, self.epoch]).permutation(m)


@dataclass(frozen=True)
class MiniBatch:
    indices: np.ndarray
    inputs: np.ndarray
    targets: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.indices)


def sample_minibatch(train, batch_size, state):
    """Next chunk of the current epoch's permutation, and the advanced state.

    Each epoch permutes the training indices once; chunks are consecutive and
    the last one of an epoch may be short.
    """
    m = len(train)
    if not 1 <= batch_size <= m:
        raise BatchTooLarge(f"batch size {batch_size} is outside [1, {m}]")
    rows = state.permutation(m)[state.position:state.position + batch_size]
    position = state.position + len(rows)
    if position >= m:
        state = replace(state, epoch=state.epoch + 1, position=0)
    else:
        state = replace(state, position=position)
    batch = MiniBatch(indices=rows, inputs=train.features[rows], targets=train.target_matrix(rows))
    return batch, state


def batches_per_epoch(m, batch_size):
    return -(-m // batch_size)


def make_regression_benchmark(n_samples=1000, n_features=10, noise=0.1, seed=0):
    """``y = x.a + sin(x.b) + N(0, noise^2)`` with Gaussian inputs."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n_samples, n_features))
    a = rng.standard_normal(n_features)
    b = rng.standard_normal(n_features) / np.sqrt(n_features)
    y = X @ a + np.sin(3.0 * (X @ b)) + noise * rng.standard_normal(n_samples)
    return Dataset(X, y, Task.REGRESSION, feature_names=tuple(f"x{i}" for i in range(n_features)))


def make_blobs_benchmark(n_samples=2000, n_features=10, separation=1.0, seed=0):
    """Two unit-variance Gaussian blobs centred at ``+-separation/2`` along a random direction."""
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal(n_features)
    direction /= np.linalg.norm(direction)
    y = np.arange(n_samples) % 2
    rng.shuffle(y)
    X = rng.standard_normal((n_samples, n_features)) + np.outer(separation * (y - 0.5), direction)
    return Dataset(X, y, Task.CLASSIFICATION, class_count=2,
                   feature_names=tuple(f"x{i}" for i in range(n_features)), class_labels=("0", "1"))
