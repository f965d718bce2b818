"""scikit-learn compatible estimators wrapping the training loop."""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.preprocessing import LabelEncoder
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_is_fitted, validate_data

from .data import Dataset, fit_standardization
from .network import Activation, NetworkConfig, Task, predict_batch
from .optimizer import OptimizerConfig, OptimizerKind
from .trainer import RunConfig, train_run


class _BaseDampedNewtonMLP(BaseEstimator):
    _task = None

    def __init__(self, hidden_layer_sizes=(6,), hidden_activation="sigmoid", optimizer="dn-sgd",
                 learning_rate=0.01, alpha=0.0, batch_size=50, epochs=20, standardize=True,
                 random_state=0):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.hidden_activation = hidden_activation
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.alpha = alpha
        self.batch_size = batch_size
        self.epochs = epochs
        self.standardize = standardize
        self.random_state = random_state

    def _n_outputs(self, y):
        raise NotImplementedError

    def _fit(self, X, y, **dataset_kwargs):
        data = Dataset(X, y, self._task, **dataset_kwargs)
        if self.standardize:
            self.scaler_ = fit_standardization(data)
            data = self.scaler_.apply(data)
        else:
            self.scaler_ = None
        sizes = (X.shape[1], *tuple(self.hidden_layer_sizes), self._n_outputs(data))
        self.network_ = NetworkConfig(sizes, self._task, Activation(self.hidden_activation))
        seed = 0 if self.random_state is None else int(self.random_state)
        opt = OptimizerConfig(OptimizerKind.parse(self.optimizer), self.learning_rate, self.alpha,
                              min(int(self.batch_size), len(data)), seed)
        self.coefs_, self.metrics_ = train_run(data, data, RunConfig(self.network_, opt, self.epochs))
        self.loss_curve_ = self.metrics_.batch_losses
        self.n_iter_ = len(self.metrics_.iterations)
        return self

    def _output(self, X):
        check_is_fitted(self, "coefs_")
        X = validate_data(self, X, reset=False)
        if self.scaler_ is not None:
            X = self.scaler_.transform_features(X)
        return predict_batch(self.coefs_, X, self.network_)


class DampedNewtonMLPRegressor(RegressorMixin, _BaseDampedNewtonMLP):
    """Single-output MLP regressor trained with SGD or a damped-Newton hybrid.

    Features and the target are z-scored internally when ``standardize`` is
    true; predictions are returned on the original target scale.
    """

    _task = Task.REGRESSION

    def _n_outputs(self, data):
        return 1

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True, dtype=np.float64)
        return self._fit(X, y)

    def predict(self, X):
        out = self._output(X)[:, 0]
        return out if self.scaler_ is None else self.scaler_.inverse_targets(out)


class DampedNewtonMLPClassifier(ClassifierMixin, _BaseDampedNewtonMLP):
    """Softmax MLP classifier trained with SGD or a damped-Newton hybrid."""

    _task = Task.CLASSIFICATION

    def _n_outputs(self, data):
        return data.class_count

    def fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=np.float64)
        check_classification_targets(y)
        self._encoder = LabelEncoder().fit(y)
        self.classes_ = self._encoder.classes_
        if len(self.classes_) < 2:
            raise ValueError("classifier needs at least two classes; got one class")
        return self._fit(X, self._encoder.transform(y), class_count=len(self.classes_))

    def predict_proba(self, X):
        return self._output(X)

    def predict(self, X):
        check_is_fitted(self, "coefs_")
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]
