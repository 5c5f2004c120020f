"""Single-hidden-layer perceptron trained by mini-batch backpropagation."""

from __future__ import annotations

import numpy as np
from scipy.special import expit, log_expit
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..core import check_rng
from ..exceptions import DataError
from ._base import SerializableMixin, check_binary_target


def init_params(n_in, n_hidden, rng):
    g = rng.generator
    lim1, lim2 = 1.0 / np.sqrt(n_in), 1.0 / np.sqrt(n_hidden)
    return {
        "W1": g.uniform(-lim1, lim1, size=(n_in, n_hidden)),
        "b1": np.zeros(n_hidden),
        "W2": g.uniform(-lim2, lim2, size=n_hidden),
        "b2": np.zeros(1),
    }


def forward(params, X):
    H = expit(X @ params["W1"] + params["b1"])
    return H, H @ params["W2"] + params["b2"][0]


def loss_and_grad(params, X, y, task):
    """Mean loss and its gradient.

    Regression uses ``1/2 mean((out - y)^2)``; classification the mean
    log-loss of ``sigmoid(out)``.
    """
    n = X.shape[0]
    H, out = forward(params, X)
    if task == "regression":
        err = out - y
        loss = 0.5 * np.mean(err**2)
    else:
        loss = -np.mean(y * log_expit(out) + (1.0 - y) * log_expit(-out))
        err = expit(out) - y
    d_out = err / n
    dH = np.outer(d_out, params["W2"]) * H * (1.0 - H)
    grads = {
        "W2": H.T @ d_out,
        "b2": np.array([d_out.sum()]),
        "W1": X.T @ dH,
        "b1": dH.sum(axis=0),
    }
    return float(loss), grads


class _BaseMLP(SerializableMixin, BaseEstimator):
    task = "regression"
    kind = "mlp"

    def __init__(self, hidden_size=None, learning_rate=0.01, n_epochs=500, batch_size=32,
                 random_state=None):
        self.hidden_size = hidden_size
        self.learning_rate = learning_rate
        self.n_epochs = n_epochs
        self.batch_size = batch_size
        self.random_state = random_state

    def _fit(self, X, y):
        if self.n_epochs < 1:
            raise ValueError("n_epochs must be >= 1")
        n, p = X.shape
        self.n_features_in_ = p
        hidden = self.hidden_size or max(4, p // 2)
        init_rng, order_rng = check_rng(self.random_state).spawn(2)
        params = init_params(p, hidden, init_rng)
        self.initial_params_ = {k: v.copy() for k, v in params.items()}
        bs = int(self.batch_size)
        losses = []
        for _ in range(self.n_epochs):
            order = order_rng.generator.permutation(n)
            for start in range(0, n, bs):
                idx = order[start:start + bs]
                _, grads = loss_and_grad(params, X[idx], y[idx], self.task)
                for k in params:
                    params[k] = params[k] - self.learning_rate * grads[k]
            losses.append(loss_and_grad(params, X, y, self.task)[0])
        self.params_ = params
        self.loss_curve_ = np.asarray(losses)
        return self

    def _output(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise DataError(f"X has {X.shape[1]} features, network was fitted on {self.n_features_in_}")
        return forward(self.params_, X)[1]

    def _payload(self):
        return {k: v.tolist() for k, v in self.params_.items()}

    def _meta(self):
        return {"iterations": int(self.n_epochs), "final_loss": float(self.loss_curve_[-1])}


class MLPRegressor(RegressorMixin, _BaseMLP):
    """Sigmoid hidden layer, linear output, squared-error loss.

    Parameters
    ----------
    hidden_size : int or None
        Hidden units; ``None`` means ``max(4, n_features // 2)``.
    learning_rate : float, default=0.01
    n_epochs : int, default=500
    batch_size : int, default=32
    random_state : int or RngStream, default=None
    """

    task = "regression"

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        return self._fit(X, y.astype(np.float64))

    def predict(self, X):
        return self._output(X)


class MLPClassifier(ClassifierMixin, _BaseMLP):
    """Sigmoid hidden layer, sigmoid output, log-loss (binary targets)."""

    task = "classification"

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_, yb = check_binary_target(y)
        return self._fit(X, yb)

    def predict_proba(self, X):
        p = expit(self._output(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return self.classes_[(self._output(X) > 0).astype(int)]
