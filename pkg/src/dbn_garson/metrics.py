"""Evaluation metrics, cross-validation and the two-method comparison."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats as _stats
from scipy.stats import rankdata

from .core import Dataset, RngStream
from .exceptions import ConfigError, DataError
from .models import make_model, predict
from .preprocess import Standardizer, numeric_columns, random_over_under, smote_balance, stratified_folds

# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def auc(scores, labels):
    """ROC AUC as the Mann-Whitney probability that a positive outranks a negative.

    Tied scores count one half.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    classes = np.unique(y)
    if classes.shape[0] != 2:
        raise DataError("AUC needs both classes present in the labels")
    pos = y == classes[1]
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    ranks = rankdata(s)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def smape(predicted, actual):
    """Symmetric MAPE in percent, ``|F-A| / ((|A|+|F|)/2)``; 0/0 terms count as 0."""
    f = np.asarray(predicted, dtype=np.float64)
    a = np.asarray(actual, dtype=np.float64)
    if f.shape != a.shape or f.size == 0:
        raise DataError("predicted and actual must be non-empty and equally long")
    num = np.abs(f - a)
    den = (np.abs(a) + np.abs(f)) / 2.0
    terms = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return float(100.0 * terms.mean())


def mape(predicted, actual, as_fraction=False):
    """Mean absolute percentage error; ``as_fraction`` reports it divided by 100."""
    f = np.asarray(predicted, dtype=np.float64)
    a = np.asarray(actual, dtype=np.float64)
    if f.shape != a.shape or f.size == 0:
        raise DataError("predicted and actual must be non-empty and equally long")
    zero = np.flatnonzero(a == 0)
    if zero.size:
        raise DataError(f"MAPE undefined: actual value is 0 at indices {zero[:10].tolist()}")
    value = 100.0 * float(np.mean(np.abs(f - a) / np.abs(a)))
    return value / 100.0 if as_fraction else value


METRICS = {
    "auc": (auc, True),
    "smape": (smape, False),
    "mape": (mape, False),
}


def score(metric, y_true, y_pred, mape_as_fraction=False):
    if metric == "auc":
        return auc(y_pred, y_true)
    if metric == "smape":
        return smape(y_pred, y_true)
    if metric == "mape":
        return mape(y_pred, y_true, as_fraction=mape_as_fraction)
    raise ConfigError(f"unknown metric {metric!r}")


def higher_is_better(metric):
    return METRICS[metric][1]


# ---------------------------------------------------------------------------
# Cross-validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FoldScores:
    method: str
    model: str
    values: np.ndarray
    metric: str = "auc"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(v)):
            raise DataError(f"non-finite fold score for {self.method}/{self.model}")
        object.__setattr__(self, "values", v)

    @property
    def k(self):
        return self.values.shape[0]

    @property
    def mean(self):
        return float(np.mean(self.values))

    def to_dict(self):
        return {"method": self.method, "model": self.model, "metric": self.metric,
                "values": self.values.tolist(), "mean": self.mean}


@dataclass(frozen=True)
class TrainingPrep:
    """Fold-local preparation: standardise, then optionally resample (training rows only)."""

    standardize: bool = True
    resample: Mapping | None = None

    def fit_apply(self, train: Dataset, test: Dataset, rng: RngStream):
        Xtr, Xte = train.X, test.X
        if self.standardize:
            cols = numeric_columns(train)
            if cols:
                sc = Standardizer(columns=cols).fit(Xtr)
                Xtr, Xte = sc.transform(Xtr), sc.transform(Xte)
        ytr = train.y
        if self.resample:
            import pandas as pd
            from dataclasses import replace
            tmp = replace(train, features=pd.DataFrame(Xtr, columns=train.features.columns))
            method = self.resample.get("method", "smote")
            if method == "smote":
                tmp = smote_balance(tmp, rng, self.resample.get("k", 5))
            else:
                tmp = random_over_under(tmp, self.resample["positive_fraction"], rng)
            Xtr, ytr = tmp.X, tmp.y
        return Xtr, ytr, Xte


def kfold_cv(dataset: Dataset, feature_subset: Sequence[int], model_kind, k, rng: RngStream,
             metric="auc", task="classification", model_params=None, prep: TrainingPrep | None = None,
             method="", mape_as_fraction=False, folds=None):
    """Stratified k-fold scores of ``model_kind`` on the selected columns.

    Scaling and resampling are fitted on each training fold only. Pass a
    precomputed ``folds`` array to score several feature subsets on identical
    folds.
    """
    if k < 2:
        raise DataError("k must be >= 2")
    prep = prep or TrainingPrep()
    data = dataset.select(list(feature_subset))
    y = data.y
    if folds is None:
        folds = stratified_folds(y, k, rng, task)
    fold_rngs = rng.spawn(k)
    values = []
    for f in range(k):
        test_idx = np.flatnonzero(folds == f)
        train_idx = np.flatnonzero(folds != f)
        if task == "classification" and (np.unique(y[test_idx]).shape[0] < 2
                                         or np.unique(y[train_idx]).shape[0] < 2):
            raise DataError(f"fold {f} contains a single class")
        Xtr, ytr, Xte = prep.fit_apply(data.take(train_idx), data.take(test_idx), fold_rngs[f])
        model = make_model(model_kind, task, **(model_params or {}))
        model.fit(Xtr, ytr)
        values.append(score(metric, y[test_idx], predict(model, Xte), mape_as_fraction))
    return FoldScores(method, model_kind, np.asarray(values), metric)


# ---------------------------------------------------------------------------
# Hypothesis tests
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    p_value: float
    degrees_of_freedom: int
    significant_at_5pct: bool
    variant: str = "pooled"

    def to_dict(self):
        return {"t": self.t_statistic, "p": self.p_value, "df": self.degrees_of_freedom,
                "significant_at_5pct": self.significant_at_5pct, "variant": self.variant}


def _from_t(t, df, variant, alpha=0.05):
    p = float(2.0 * _stats.t.sf(abs(t), df))
    return TTestResult(float(t), min(max(p, 0.0), 1.0), int(df), p < alpha, variant)


def _values(x):
    return x.values if isinstance(x, FoldScores) else np.asarray(x, dtype=np.float64)


def two_sample_t_test(a, b, alpha=0.05):
    """Pooled-variance two-sample t-test with ``df = 2k - 2``.

    Zero pooled variance gives ``t = +-inf, p = 0`` when the means differ and
    ``t = 0, p = 1`` when they agree.
    """
    a, b = _values(a), _values(b)
    if a.shape[0] != b.shape[0]:
        raise DataError(f"fold counts differ: {a.shape[0]} vs {b.shape[0]}")
    k = a.shape[0]
    if k < 2:
        raise DataError("need at least 2 folds per method")
    df = 2 * k - 2
    diff = a.mean() - b.mean()
    pooled = ((k - 1) * a.var(ddof=1) + (k - 1) * b.var(ddof=1)) / df
    se = np.sqrt(pooled * 2.0 / k)
    if se == 0.0:
        if diff == 0.0:
            return TTestResult(0.0, 1.0, df, False, "pooled")
        return TTestResult(float(np.copysign(np.inf, diff)), 0.0, df, True, "pooled")
    return _from_t(diff / se, df, "pooled", alpha)


def paired_t_test(a, b, alpha=0.05):
    """Paired t-test on per-fold differences (``df = k - 1``)."""
    a, b = _values(a), _values(b)
    if a.shape[0] != b.shape[0]:
        raise DataError(f"fold counts differ: {a.shape[0]} vs {b.shape[0]}")
    d = a - b
    k = d.shape[0]
    se = d.std(ddof=1) / np.sqrt(k)
    if se == 0.0:
        if d.mean() == 0.0:
            return TTestResult(0.0, 1.0, k - 1, False, "paired")
        return TTestResult(float(np.copysign(np.inf, d.mean())), 0.0, k - 1, True, "paired")
    return _from_t(d.mean() / se, k - 1, "paired", alpha)


T_TESTS = {"pooled": two_sample_t_test, "paired": paired_t_test}


# ---------------------------------------------------------------------------
# Method selection
# ---------------------------------------------------------------------------

INTERPRETABLE_REGRESSORS = ("linear", "ridge", "lasso")


@dataclass(frozen=True)
class ModelComparison:
    model: str
    mean_a: float
    mean_b: float
    test: TTestResult


@dataclass(frozen=True)
class MethodDecision:
    winner: str  # method label, or "tie"
    deciding_model: str
    significant: bool
    rationale: str
    method_labels: tuple = field(default=("EGA", "Wald"))

    def to_dict(self):
        return {"winner": self.winner, "deciding_model": self.deciding_model,
                "significant": self.significant, "rationale": self.rationale}


def select_better_method(results: Sequence[ModelComparison], task, labels=("EGA", "Wald")):
    """Pick the better ranking method by the interpretable-model rule.

    Classification compares decision-tree mean AUC (higher wins). Regression
    takes, among linear/ridge/lasso, the single lowest mean error across both
    methods; the method that achieved it wins.
    """
    by_model = {r.model: r for r in results}
    a_label, b_label = labels
    if task == "classification":
        if "tree" not in by_model:
            raise DataError("classification decision needs decision-tree results")
        r = by_model["tree"]
        if r.mean_a == r.mean_b:
            winner = "tie"
        else:
            winner = a_label if r.mean_a > r.mean_b else b_label
        deciding = r
        what = f"decision-tree mean AUC {r.mean_a:.4f} ({a_label}) vs {r.mean_b:.4f} ({b_label})"
    else:
        cands = [by_model[m] for m in INTERPRETABLE_REGRESSORS if m in by_model]
        if not cands:
            raise DataError("regression decision needs linear, ridge or lasso results")
        best_a = min(cands, key=lambda r: r.mean_a)
        best_b = min(cands, key=lambda r: r.mean_b)
        if best_a.mean_a == best_b.mean_b:
            winner, deciding = "tie", best_a
        elif best_a.mean_a < best_b.mean_b:
            winner, deciding = a_label, best_a
        else:
            winner, deciding = b_label, best_b
        what = (f"lowest interpretable-model error {best_a.mean_a:.4f} ({a_label}, {best_a.model}) "
                f"vs {best_b.mean_b:.4f} ({b_label}, {best_b.model})")
    sig = deciding.test.significant_at_5pct
    if winner == "tie":
        rationale = f"tie: {what}; neither method preferred"
    else:
        rationale = (f"{winner} selected on {what}; t-test on {deciding.model} "
                     f"{'significant' if sig else 'not significant'} at 5% "
                     f"(t={deciding.test.t_statistic:.4g}, p={deciding.test.p_value:.4g})")
    return MethodDecision(winner, deciding.model, bool(sig), rationale, tuple(labels))
