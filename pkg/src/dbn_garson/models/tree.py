"""CART decision trees: Gini for binary classification, variance for regression."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..exceptions import DataError
from ._base import SerializableMixin, check_binary_target


@dataclass
class TreeNode:
    value: float
    n_samples: int
    impurity: float
    feature: int = -1
    threshold: float = 0.0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self):
        return self.feature < 0

    def to_dict(self):
        d = {"value": self.value, "n_samples": self.n_samples, "impurity": self.impurity}
        if not self.is_leaf:
            d.update(feature=self.feature, threshold=self.threshold,
                     left=self.left.to_dict(), right=self.right.to_dict())
        return d


def _gini(pos, n):
    p = pos / n
    return 2.0 * p * (1.0 - p)


def _best_split(X, y, min_leaf, criterion):
    """Best ``(feature, threshold, decrease)`` or ``None`` if no valid split.

    Candidates are midpoints between consecutive distinct sorted values with at
    least ``min_leaf`` rows on each side. Scanning features in order and
    thresholds ascending with a strict ``>`` keeps the lowest feature index,
    then the lowest threshold, among ties.
    """
    n = y.shape[0]
    nl = np.arange(1, n, dtype=np.float64)
    nr = n - nl
    size_ok = (nl >= min_leaf) & (nr >= min_leaf)
    if criterion == "gini":
        parent = _gini(y.sum(), n)
    else:
        parent = np.sum((y - y.mean()) ** 2) / n
    best = None
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        xs, ys = X[order, f], y[order]
        valid = size_ok & (xs[1:] > xs[:-1])
        if not valid.any():
            continue
        cs = np.cumsum(ys)[:-1]
        if criterion == "gini":
            total = ys.sum()
            child = (nl * _gini(cs, nl) + nr * _gini(total - cs, nr)) / n
        else:
            cs2 = np.cumsum(ys**2)[:-1]
            total, total2 = ys.sum(), np.sum(ys**2)
            sse_l = cs2 - cs**2 / nl
            sse_r = (total2 - cs2) - (total - cs) ** 2 / nr
            child = (sse_l + sse_r) / n
        dec = np.where(valid, parent - child, -np.inf)
        i = int(np.argmax(dec))
        if best is None or dec[i] > best[2]:
            best = (f, 0.5 * (xs[i] + xs[i + 1]), float(dec[i]))
    return best


class _BaseTree(SerializableMixin, BaseEstimator):
    criterion = "gini"

    def __init__(self, max_depth=8, min_leaf=5):
        self.max_depth = max_depth
        self.min_leaf = min_leaf

    def _impurity(self, y):
        if self.criterion == "gini":
            return _gini(y.sum(), y.shape[0])
        return float(np.var(y))

    def _grow(self, X, y, depth):
        node = TreeNode(float(y.mean()), int(y.shape[0]), float(self._impurity(y)))
        if depth >= self.max_depth or node.impurity <= 0.0 or y.shape[0] < 2 * self.min_leaf:
            return node
        split = _best_split(X, y, self.min_leaf, self.criterion)
        if split is None or split[2] < -1e-12:
            return node
        f, thr, _ = split
        mask = X[:, f] <= thr
        node.feature, node.threshold = f, float(thr)
        node.left = self._grow(X[mask], y[mask], depth + 1)
        node.right = self._grow(X[~mask], y[~mask], depth + 1)
        return node

    def _flatten(self):
        feats, thrs, lefts, rights, vals = [], [], [], [], []

        def visit(node):
            i = len(feats)
            feats.append(node.feature)
            thrs.append(node.threshold)
            vals.append(node.value)
            lefts.append(-1)
            rights.append(-1)
            if not node.is_leaf:
                lefts[i] = visit(node.left)
                rights[i] = visit(node.right)
            return i

        visit(self.root_)
        self._feature = np.asarray(feats)
        self._threshold = np.asarray(thrs)
        self._left = np.asarray(lefts)
        self._right = np.asarray(rights)
        self._value = np.asarray(vals)

    def _fit(self, X, y):
        if self.min_leaf < 1 or self.max_depth < 0:
            raise ValueError("min_leaf must be >= 1 and max_depth >= 0")
        self.n_features_in_ = X.shape[1]
        self.root_ = self._grow(X, y, 0)
        self._flatten()
        return self

    def _leaf_values(self, X):
        check_is_fitted(self, "root_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise DataError(f"X has {X.shape[1]} features, tree was fitted on {self.n_features_in_}")
        node = np.zeros(X.shape[0], dtype=np.intp)
        rows = np.arange(X.shape[0])
        while True:
            f = self._feature[node]
            inner = f >= 0
            if not inner.any():
                break
            go_left = X[rows[inner], f[inner]] <= self._threshold[node[inner]]
            node[inner] = np.where(go_left, self._left[node[inner]], self._right[node[inner]])
        return self._value[node]

    @property
    def n_leaves_(self):
        check_is_fitted(self, "root_")
        return int(np.sum(self._feature < 0))

    def _payload(self):
        return {"root": self.root_.to_dict()}


class DecisionTreeClassifier(ClassifierMixin, _BaseTree):
    """Binary CART classifier; leaves store the positive-class fraction.

    Parameters
    ----------
    max_depth : int, default=8
    min_leaf : int, default=5
        Minimum number of training rows in each child of a split.
    """

    kind = "tree"
    criterion = "gini"

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_, yb = check_binary_target(y)
        return self._fit(X, yb)

    def predict_proba(self, X):
        p = self._leaf_values(X)
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return self.classes_[(self._leaf_values(X) > 0.5).astype(int)]


class DecisionTreeRegressor(RegressorMixin, _BaseTree):
    """CART regressor splitting on the largest reduction in squared error."""

    kind = "tree"
    criterion = "variance"

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        return self._fit(X, y.astype(np.float64))

    def predict(self, X):
        return self._leaf_values(X)
