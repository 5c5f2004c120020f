"""Downstream models used to score feature subsets."""

from ..exceptions import ConfigError
from .linear import Lasso, LinearRegression, Ridge, fit_linear_family
from .logistic import LogisticRegression, fit_logistic
from .mlp import MLPClassifier, MLPRegressor
from .svr import LinearSVR
from .tree import DecisionTreeClassifier, DecisionTreeRegressor, TreeNode

CLASSIFIERS = {
    "logistic": LogisticRegression,
    "tree": DecisionTreeClassifier,
    "mlp": MLPClassifier,
}
REGRESSORS = {
    "linear": LinearRegression,
    "ridge": Ridge,
    "lasso": Lasso,
    "svr": LinearSVR,
    "tree": DecisionTreeRegressor,
    "mlp": MLPRegressor,
}


def make_model(kind, task, **params):
    table = CLASSIFIERS if task == "classification" else REGRESSORS
    if kind not in table:
        raise ConfigError(f"model {kind!r} not available for {task}; choose from {sorted(table)}")
    return table[kind](**params)


def fit_tree(X, y, max_depth=8, min_leaf=5, task="classification"):
    cls = DecisionTreeClassifier if task == "classification" else DecisionTreeRegressor
    return cls(max_depth=max_depth, min_leaf=min_leaf).fit(X, y)


def fit_svr(X, y, c=1.0, epsilon=0.0):
    return LinearSVR(C=c, epsilon=epsilon).fit(X, y)


def fit_mlp(X, y, task="regression", **config):
    cls = MLPRegressor if task == "regression" else MLPClassifier
    return cls(**config).fit(X, y)


def predict(model, X):
    """Positive-class probability for classifiers, predictions for regressors."""
    if hasattr(model, "predict_proba"):
        return model.predict_proba(X)[:, 1]
    return model.predict(X)


__all__ = [
    "CLASSIFIERS", "REGRESSORS", "DecisionTreeClassifier", "DecisionTreeRegressor", "Lasso",
    "LinearRegression", "LinearSVR", "LogisticRegression", "MLPClassifier", "MLPRegressor",
    "Ridge", "TreeNode", "fit_linear_family", "fit_logistic", "fit_mlp", "fit_svr", "fit_tree",
    "make_model", "predict",
]
