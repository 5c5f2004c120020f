"""Least squares, ridge and lasso regression."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..exceptions import DataError
from ._base import SerializableMixin


def _solve_normal(A, b):
    """Solve ``A x = b`` for a symmetric PSD ``A``, jittering the diagonal if singular."""
    try:
        if np.linalg.cond(A) < 1e12:
            return np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        pass
    jitter = 1e-10 * max(np.trace(A) / max(A.shape[0], 1), 1.0)
    return np.linalg.solve(A + jitter * np.eye(A.shape[0]), b)


class _LinearBase(SerializableMixin, RegressorMixin, BaseEstimator):
    def _check(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        if X.shape[0] < 2:
            raise DataError("need at least 2 samples")
        self.n_features_in_ = X.shape[1]
        return X, y.astype(np.float64)

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise DataError(f"X has {X.shape[1]} features, model was fitted on {self.n_features_in_}")
        return self.intercept_ + X @ self.coef_

    def _payload(self):
        return {"intercept": self.intercept_, "coef": self.coef_.tolist()}


class LinearRegression(_LinearBase):
    """Ordinary least squares via the centred normal equations."""

    kind = "linear"

    def fit(self, X, y):
        X, y = self._check(X, y)
        xm, ym = X.mean(axis=0), y.mean()
        Xc = X - xm
        self.coef_ = _solve_normal(Xc.T @ Xc, Xc.T @ (y - ym))
        self.intercept_ = float(ym - xm @ self.coef_)
        return self


class Ridge(_LinearBase):
    """``(X'X + alpha I)^-1 X'y`` on centred data; the intercept is not penalised."""

    kind = "ridge"

    def __init__(self, alpha=1.0):
        self.alpha = alpha

    def fit(self, X, y):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        X, y = self._check(X, y)
        xm, ym = X.mean(axis=0), y.mean()
        Xc = X - xm
        A = Xc.T @ Xc + self.alpha * np.eye(X.shape[1])
        self.coef_ = _solve_normal(A, Xc.T @ (y - ym))
        self.intercept_ = float(ym - xm @ self.coef_)
        return self


def soft_threshold(z, t):
    return np.sign(z) * max(abs(z) - t, 0.0)


def lasso_objective(X, y, coef, intercept, alpha):
    r = y - intercept - X @ coef
    return 0.5 * np.mean(r**2) + alpha * np.sum(np.abs(coef))


def lasso_alpha_max(X, y):
    """Smallest penalty at which every (standardised-scale) coefficient is zero."""
    Xs, _, _ = _standardise(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    return float(np.max(np.abs(Xs.T @ (y - y.mean()))) / X.shape[0])


def _standardise(X):
    mean = X.mean(axis=0)
    std = X.std(axis=0, ddof=1) if X.shape[0] > 1 else np.ones(X.shape[1])
    std = np.where(std > 0, std, 1.0)
    return (X - mean) / std, mean, std


class Lasso(_LinearBase):
    """L1-penalised least squares by cyclic coordinate descent.

    Minimises ``1/(2n) ||y - b - Xs w||^2 + alpha ||w||_1`` where ``Xs`` is X
    standardised internally (sample std); coefficients are reported on the
    original scale. Stops when the largest coefficient change in a sweep is
    below ``tol``; hitting ``max_iter`` sweeps sets ``converged_ = False``.
    """

    kind = "lasso"

    def __init__(self, alpha=1.0, tol=1e-7, max_iter=10000):
        self.alpha = alpha
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        X, y = self._check(X, y)
        n, p = X.shape
        Xs, mean, std = _standardise(X)
        ym = y.mean()
        r = y - ym
        w = np.zeros(p)
        col_sq = np.sum(Xs**2, axis=0) / n
        self.converged_ = False
        self.n_iter_ = 0
        for sweep in range(1, self.max_iter + 1):
            max_delta = 0.0
            for j in range(p):
                if col_sq[j] == 0.0:
                    continue
                old = w[j]
                rho = Xs[:, j] @ r / n + col_sq[j] * old
                new = soft_threshold(rho, self.alpha) / col_sq[j]
                if new != old:
                    r -= Xs[:, j] * (new - old)
                    w[j] = new
                    max_delta = max(max_delta, abs(new - old))
            self.n_iter_ = sweep
            if max_delta < self.tol:
                self.converged_ = True
                break
        self.std_coef_ = w
        self.coef_ = w / std
        self.intercept_ = float(ym - mean @ self.coef_)
        return self

    def _meta(self):
        return {"iterations": int(self.n_iter_), "converged": bool(self.converged_)}


def fit_linear_family(X, y, kind, lam=0.0):
    if kind == "linear":
        return LinearRegression().fit(X, y)
    if kind == "ridge":
        return Ridge(alpha=lam).fit(X, y)
    if kind == "lasso":
        return Lasso(alpha=lam).fit(X, y)
    raise ValueError(f"unknown linear model kind {kind!r}")
