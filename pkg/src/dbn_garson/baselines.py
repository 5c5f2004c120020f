"""Wald chi-square feature ranking from logistic (binary) or OLS (continuous) fits.

For each coefficient the statistic is ``(beta_j / SE_j)^2``, asymptotically
chi-square with one degree of freedom under ``beta_j = 0``. The intercept is
fitted but never ranked.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .attribution import ImportanceVector
from .exceptions import ConvergenceError, DataError, NumericalError, PerfectSeparationError
from .models._base import check_binary_target
from .models.logistic import newton_logistic

RIDGE = 1e-8
GRAD_TOL = 1e-8
MAX_ITER = 200


@dataclass(frozen=True)
class WaldRanking:
    statistics: np.ndarray
    ranking: np.ndarray
    coefficients: np.ndarray
    std_errors: np.ndarray
    feature_names: Optional[tuple] = None
    stabilized: bool = False  # True when a ridge had to be added to a rank-deficient design

    @classmethod
    def build(cls, beta, se, feature_names=None, stabilized=False):
        stats = (beta / se) ** 2
        if not np.all(np.isfinite(stats)):
            raise NumericalError("non-finite Wald statistic")
        names = None if feature_names is None else tuple(str(n) for n in feature_names)
        return cls(stats, np.argsort(-stats, kind="stable"), beta, se, names, bool(stabilized))

    def to_dict(self):
        return {
            "statistics": self.statistics.tolist(),
            "ranking": self.ranking.tolist(),
            "coefficients": self.coefficients.tolist(),
            "std_errors": self.std_errors.tolist(),
            "feature_names": None if self.feature_names is None else list(self.feature_names),
            "stabilized": self.stabilized,
        }

    def as_importance(self):
        """Statistics rescaled to percent, in the same report schema as EGA scores."""
        total = self.statistics.sum()
        scores = 100.0 * self.statistics / total if total > 0 else np.full_like(self.statistics, 100.0 / self.statistics.shape[0])
        return ImportanceVector.from_scores(scores, self.feature_names)


def wald_rank_classification(X, y, feature_names=None, ridge=RIDGE, tol=GRAD_TOL, max_iter=MAX_ITER):
    """Rank features by logistic-regression Wald statistics.

    Raises
    ------
    PerfectSeparationError
        If the fitted linear predictor separates the two classes.
    ConvergenceError
        If Newton's method has not reached ``max|grad| < tol`` after ``max_iter``.
    """
    X, y = check_X_y(X, y, dtype=np.float64)
    _, yb = check_binary_target(y)
    n = X.shape[0]
    beta, _, grad_norm = newton_logistic(X, yb, ridge, tol=tol, max_iter=max_iter)
    Z = np.hstack([np.ones((n, 1)), X])
    eta = Z @ beta
    margin = np.where(yb == 1, eta, -eta)
    if np.min(margin) > 0 and np.max(np.abs(beta[1:])) > 20.0:
        raise PerfectSeparationError("classes are linearly separable; Wald statistics are undefined")
    if grad_norm >= tol:
        raise ConvergenceError(
            f"logistic fit did not converge in {max_iter} iterations (max|grad| = {grad_norm:.3g})",
            gradient_norm=grad_norm,
        )
    p = expit(eta)
    info = (Z.T * (p * (1.0 - p))) @ Z
    info[np.arange(1, info.shape[0]), np.arange(1, info.shape[0])] += n * ridge
    cov = np.linalg.inv(info)
    se = np.sqrt(np.diag(cov))[1:]
    return WaldRanking.build(beta[1:], se, feature_names)


def wald_rank_regression(X, y, feature_names=None, ridge=None):
    """Rank features by OLS Wald statistics ``(beta_j / SE_j)^2``.

    ``SE_j = s * sqrt((Z'Z)^-1_jj)`` with ``s^2 = RSS / (n - p)`` and ``Z`` the
    design with intercept. A rank-deficient design raises unless ``ridge`` is
    given, in which case ``ridge * I`` is added to the coefficient block.
    ``ridge="auto"`` adds ``1e-8 * n`` only when the design is rank deficient,
    warns, and marks the result ``stabilized``.
    """
    X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
    y = y.astype(np.float64)
    n, k = X.shape
    Z = np.hstack([np.ones((n, 1)), X])
    p = Z.shape[1]
    if n <= p:
        raise DataError(f"need more samples ({n}) than parameters ({p})")
    A = Z.T @ Z
    deficient = np.linalg.matrix_rank(Z) < p
    if ridge == "auto":
        ridge = RIDGE * n if deficient else None
        if deficient:
            warnings.warn("rank-deficient design; Wald statistics ridge-stabilised", RuntimeWarning)
    if ridge:
        A[np.arange(1, p), np.arange(1, p)] += ridge
    elif deficient:
        raise NumericalError("design matrix is rank deficient; pass ridge= to stabilise")
    A_inv = np.linalg.inv(A)
    beta = A_inv @ Z.T @ y
    rss = float(np.sum((y - Z @ beta) ** 2))
    s2 = rss / (n - p)
    # residuals at rounding level (exact fit or constant y) leave the SEs undefined
    if rss <= 1e-24 * max(float(y @ y), 1e-300) or np.ptp(y) == 0:
        raise NumericalError("zero residual variance or zero coefficients; Wald statistics undefined")
    se = np.sqrt(s2 * np.diag(A_inv))[1:]
    return WaldRanking.build(beta[1:], se, feature_names, stabilized=bool(ridge))


class WaldSelector(SelectorMixin, BaseEstimator):
    """Keep the ``k`` features with the largest Wald chi-square statistic.

    Parameters
    ----------
    k : int, default=10
    task : {"classification", "regression"}, default="classification"
    """

    def __init__(self, k=10, task="classification"):
        self.k = k
        self.task = task

    def fit(self, X, y):
        names = [str(c) for c in X.columns] if hasattr(X, "columns") else None
        X = check_array(X, dtype=np.float64)
        if not 1 <= self.k <= X.shape[1]:
            raise ValueError(f"k must be in [1, {X.shape[1]}], got {self.k}")
        rank = wald_rank_classification if self.task == "classification" else wald_rank_regression
        self.ranking_ = rank(X, y, feature_names=names)
        self.scores_ = self.ranking_.statistics
        self.n_features_in_ = X.shape[1]
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "ranking_")
        mask = np.zeros(self.n_features_in_, dtype=bool)
        mask[self.ranking_.ranking[: self.k]] = True
        return mask
