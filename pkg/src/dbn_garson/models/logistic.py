"""L2-regularised logistic regression fitted by damped Newton iterations."""

from __future__ import annotations

import numpy as np
from scipy.special import expit, log_expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..exceptions import DataError
from ._base import SerializableMixin, check_binary_target


def _objective(beta, Z, y, penalty):
    eta = Z @ beta
    # -[y log p + (1-y) log(1-p)] written with log-sigmoids for stability
    loss = -np.mean(y * log_expit(eta) + (1.0 - y) * log_expit(-eta))
    return loss + 0.5 * np.sum(penalty * beta**2)


def newton_logistic(X, y, l2, tol=1e-6, max_iter=100):
    """Minimise ``mean log-loss + l2/2 * ||coef||^2`` (intercept unpenalised).

    Returns ``(beta, n_iter, max_abs_gradient)``; ``beta[0]`` is the intercept.
    Each Newton step is halved until the objective does not increase.
    """
    n = X.shape[0]
    Z = np.hstack([np.ones((n, 1)), X])
    penalty = np.full(Z.shape[1], float(l2))
    penalty[0] = 0.0
    beta = np.zeros(Z.shape[1])
    obj = _objective(beta, Z, y, penalty)
    grad_norm = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        p = expit(Z @ beta)
        grad = Z.T @ (p - y) / n + penalty * beta
        grad_norm = float(np.max(np.abs(grad)))
        if grad_norm < tol:
            return beta, it - 1, grad_norm
        w = p * (1.0 - p)
        H = (Z.T * w) @ Z / n + np.diag(penalty)
        # tiny jitter keeps an unpenalised intercept solvable on degenerate data
        H[np.diag_indices_from(H)] += 1e-12
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, grad, rcond=None)[0]
        t = 1.0
        while True:
            cand = beta - t * step
            cand_obj = _objective(cand, Z, y, penalty)
            if cand_obj <= obj or t < 1e-10:
                break
            t *= 0.5
        beta, obj = cand, cand_obj
    p = expit(Z @ beta)
    grad_norm = float(np.max(np.abs(Z.T @ (p - y) / n + penalty * beta)))
    return beta, it, grad_norm


class LogisticRegression(SerializableMixin, ClassifierMixin, BaseEstimator):
    """Binary logistic regression with an L2 penalty on the coefficients.

    The penalty follows the ``C`` convention (``1/2 ||w||^2 + C * sum(loss)``),
    i.e. ``l2 = 1 / (C * n_samples)`` on the mean-loss scale. Passing ``l2``
    directly overrides ``C``.
    """

    kind = "logistic"

    def __init__(self, C=1.0, l2=None, tol=1e-6, max_iter=100):
        self.C = C
        self.l2 = l2
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_, yb = check_binary_target(y)
        l2 = self.l2 if self.l2 is not None else 1.0 / (self.C * X.shape[0])
        beta, self.n_iter_, self.gradient_norm_ = newton_logistic(X, yb, l2, self.tol, self.max_iter)
        self.converged_ = self.gradient_norm_ < self.tol
        self.intercept_ = float(beta[0])
        self.coef_ = beta[1:]
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise DataError(f"X has {X.shape[1]} features, model was fitted on {self.n_features_in_}")
        return self.intercept_ + X @ self.coef_

    def predict_proba(self, X):
        p = expit(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return self.classes_[(self.decision_function(X) > 0).astype(int)]

    def _payload(self):
        return {"intercept": self.intercept_, "coef": self.coef_.tolist(),
                "classes": self.classes_.tolist()}

    def _meta(self):
        return {"iterations": int(self.n_iter_), "converged": bool(self.converged_)}


def fit_logistic(X, y, l2):
    return LogisticRegression(l2=l2).fit(X, y)
