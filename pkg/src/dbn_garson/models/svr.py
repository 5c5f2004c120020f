"""Linear epsilon-insensitive support vector regression."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..exceptions import DataError
from ._base import SerializableMixin


def svr_objective(X, y, w, b, C, epsilon):
    r = np.abs(y - X @ w - b)
    return 0.5 * w @ w + C * np.sum(np.maximum(0.0, r - epsilon))


class LinearSVR(SerializableMixin, RegressorMixin, BaseEstimator):
    """Minimises ``1/2 ||w||^2 + C * sum(max(0, |y - Xw - b| - epsilon))``.

    Full-batch subgradient descent on the objective divided by ``C * n``, with
    steps ``eta0 / sqrt(t)``; the returned solution is the best of the iterate
    trajectory and its tail average. Fully deterministic, no random draws.

    Parameters
    ----------
    C : float, default=1.0
    epsilon : float, default=0.0
    n_epochs : int, default=2000
    eta0 : float, default=1.0
        Initial step, divided internally by the mean squared row norm.
    """

    kind = "svr"

    def __init__(self, C=1.0, epsilon=0.0, n_epochs=2000, eta0=1.0):
        self.C = C
        self.epsilon = epsilon
        self.n_epochs = n_epochs
        self.eta0 = eta0

    def fit(self, X, y):
        if self.C <= 0 or self.epsilon < 0:
            raise ValueError("C must be > 0 and epsilon >= 0")
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        y = y.astype(np.float64)
        n, p = X.shape
        self.n_features_in_ = p
        reg = 1.0 / (self.C * n)
        scale = self.eta0 / (np.mean(np.sum(X**2, axis=1)) + 1.0)
        w, b = np.zeros(p), float(np.mean(y))

        def objective(w_, b_):
            return svr_objective(X, y, w_, b_, self.C, self.epsilon) / (self.C * n)

        best = (objective(w, b), w.copy(), b)
        tail_start = self.n_epochs // 2
        w_sum, b_sum, n_sum = np.zeros(p), 0.0, 0
        for t in range(1, self.n_epochs + 1):
            r = y - X @ w - b
            s = np.where(np.abs(r) > self.epsilon, np.sign(r), 0.0)
            gw = reg * w - X.T @ s / n
            gb = -np.mean(s)
            eta = scale / np.sqrt(t)
            w = w - eta * gw
            b = b - eta * gb
            obj = objective(w, b)
            if obj < best[0]:
                best = (obj, w.copy(), b)
            if t > tail_start:
                w_sum += w
                b_sum += b
                n_sum += 1
        if n_sum:
            wa, ba = w_sum / n_sum, b_sum / n_sum
            obj = objective(wa, ba)
            if obj < best[0]:
                best = (obj, wa, ba)
        self.objective_, self.coef_, self.intercept_ = best[0], best[1], float(best[2])
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise DataError(f"X has {X.shape[1]} features, model was fitted on {self.n_features_in_}")
        return self.intercept_ + X @ self.coef_

    def _payload(self):
        return {"intercept": self.intercept_, "coef": self.coef_.tolist()}

    def _meta(self):
        return {"iterations": int(self.n_epochs), "objective": float(self.objective_)}
