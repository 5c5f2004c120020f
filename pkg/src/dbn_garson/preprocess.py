"""Data preparation: scaling, encoding, resampling, splitting and recipes."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.neighbors import NearestNeighbors
from sklearn.utils.validation import check_array, check_is_fitted

from .core import ColumnSpec, Dataset, RngStream, as_matrix
from .exceptions import ConfigError, DataError

# ---------------------------------------------------------------------------
# Standardisation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StandardizeStats:
    columns: tuple
    mean: np.ndarray
    std: np.ndarray

    def apply(self, X):
        X = np.array(X, dtype=np.float64)
        cols = list(self.columns)
        X[:, cols] = (X[:, cols] - self.mean) / self.std
        return X

    def inverse(self, X):
        X = np.array(X, dtype=np.float64)
        cols = list(self.columns)
        X[:, cols] = X[:, cols] * self.std + self.mean
        return X

    def to_dict(self):
        return {"columns": list(self.columns), "mean": self.mean.tolist(), "std": self.std.tolist()}


def standardize(data, columns=None, passthrough_constant=False):
    """Centre and scale ``columns`` to mean 0 and sample (n-1) std 1.

    Constant columns raise unless ``passthrough_constant`` is set, in which case
    they are left untouched (recorded with mean 0, std 1).
    """
    X = as_matrix(data, "data")
    if X.shape[0] < 2:
        raise DataError("standardisation needs at least 2 samples")
    cols = tuple(range(X.shape[1])) if columns is None else tuple(int(c) for c in columns)
    mean = X[:, list(cols)].mean(axis=0)
    std = X[:, list(cols)].std(axis=0, ddof=1)
    const = std == 0.0
    if const.any():
        if not passthrough_constant:
            bad = [cols[i] for i in np.flatnonzero(const)]
            raise DataError(f"zero-variance column(s) {bad} cannot be standardised")
        mean = np.where(const, 0.0, mean)
        std = np.where(const, 1.0, std)
    stats = StandardizeStats(cols, mean, std)
    return stats.apply(X), stats


class Standardizer(TransformerMixin, BaseEstimator):
    """Column-subset standard scaler (sample std, divisor n-1).

    Parameters
    ----------
    columns : sequence of int or None
        Columns to scale; ``None`` scales all of them.
    passthrough_constant : bool, default=True
    """

    def __init__(self, columns=None, passthrough_constant=True):
        self.columns = columns
        self.passthrough_constant = passthrough_constant

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        _, self.stats_ = standardize(X, self.columns, self.passthrough_constant)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "stats_")
        return self.stats_.apply(check_array(X, dtype=np.float64))

    def inverse_transform(self, X):
        check_is_fitted(self, "stats_")
        return self.stats_.inverse(check_array(X, dtype=np.float64))


# ---------------------------------------------------------------------------
# Column operations on datasets
# ---------------------------------------------------------------------------


def _label(value):
    if isinstance(value, (float, np.floating)) and float(value).is_integer():
        return str(int(value))
    return str(value)


def _sorted_categories(values):
    uniq = pd.unique(values)
    try:
        return sorted(uniq)
    except TypeError:
        return sorted(uniq, key=str)


def one_hot(data: Dataset, column, categories=None):
    """Replace ``column`` by one 0/1 indicator per category, in place order.

    With an explicit ``categories`` list, values outside the list raise.
    Indicator columns are named ``<column>_<category>``.
    """
    idx = data.column_index(column)
    values = data.features[column]
    if categories is None:
        cats = _sorted_categories(values)
    else:
        cats = list(categories)
        known = {_label(c) for c in cats}
        unseen = sorted({_label(v) for v in pd.unique(values)} - known)
        if unseen:
            raise DataError(f"column {column!r}: categories {unseen} not in the explicit list")
    labels = values.map(_label)
    new_cols, new_specs = {}, []
    for c in cats:
        name = f"{column}_{_label(c)}"
        new_cols[name] = (labels == _label(c)).astype(np.float64).to_numpy()
        new_specs.append(ColumnSpec(name, "one_hot_derived", source=str(column), category=_label(c)))
    left = data.features.iloc[:, :idx]
    right = data.features.iloc[:, idx + 1:]
    frame = pd.concat([left, pd.DataFrame(new_cols, index=data.features.index), right], axis=1)
    schema = data.schema[:idx] + tuple(new_specs) + data.schema[idx + 1:]
    return replace(data, features=frame, schema=schema)


def drop_columns(data: Dataset, columns):
    for c in columns:
        data.column_index(c)
    keep = [i for i, n in enumerate(data.feature_names) if n not in set(columns)]
    return data.select(keep)


def map_values(data: Dataset, column, mapping):
    """Replace values of ``column`` via ``mapping`` (keys compared as labels)."""
    data.column_index(column)
    lookup = {str(k): v for k, v in mapping.items()}
    col = data.features[column]
    mapped = col.map(lambda v: lookup.get(_label(v), v))
    frame = data.features.copy()
    frame[column] = mapped.infer_objects()
    return replace(data, features=frame)


_TARGET_TRANSFORMS = {"log1p": np.log1p, "identity": lambda a: a}


def set_target(data: Dataset, column, transform=None, positive=None):
    """Move ``column`` out of the features into the target.

    ``positive`` turns a label column into 0/1 (1 where value == positive);
    ``transform`` names a numeric transform such as ``"log1p"``.
    """
    idx = data.column_index(column)
    raw = data.features[column]
    if positive is not None:
        y = (raw.map(_label) == _label(positive)).astype(np.int64).to_numpy()
    else:
        y = raw.to_numpy()
    if transform is not None:
        if transform not in _TARGET_TRANSFORMS:
            raise ConfigError(f"unknown target transform {transform!r}")
        y = _TARGET_TRANSFORMS[transform](np.asarray(y, dtype=np.float64))
    rest = [i for i in range(data.n_features) if i != idx]
    out = data.select(rest)
    return replace(out, target=y, target_name=str(column))


def numeric_columns(data: Dataset):
    return [i for i, c in enumerate(data.schema) if c.kind == "numeric"]


# ---------------------------------------------------------------------------
# Resampling
# ---------------------------------------------------------------------------


def smote(minority, k, n_synthetic, rng: RngStream):
    """SMOTE interpolation: ``x + u * (x_nn - x)`` with ``u ~ U[0, 1]``.

    ``x`` is a uniformly drawn minority row and ``x_nn`` one of its ``k``
    nearest minority neighbours (Euclidean), also chosen uniformly.
    """
    M = as_matrix(minority, "minority samples")
    k = int(k)
    if k < 1:
        raise DataError("k must be >= 1")
    if M.shape[0] <= k:
        raise DataError(f"SMOTE needs more than k={k} minority rows, got {M.shape[0]}")
    if n_synthetic == 0:
        return np.empty((0, M.shape[1]))
    nn = NearestNeighbors(n_neighbors=k + 1).fit(M)
    _, neigh = nn.kneighbors(M)
    neigh = neigh[:, 1:]  # drop self
    g = rng.generator
    base = g.integers(0, M.shape[0], size=n_synthetic)
    pick = neigh[base, g.integers(0, k, size=n_synthetic)]
    lam = g.random((n_synthetic, 1))
    return M[base] + lam * (M[pick] - M[base])


def _binary_classes(y):
    y = np.asarray(y)
    classes = np.unique(y)
    if classes.shape[0] != 2:
        raise DataError(f"binary target required, found classes {classes.tolist()}")
    return classes


def smote_balance(data: Dataset, rng: RngStream, k=5):
    """Append SMOTE rows until both classes are equally frequent."""
    X, y = data.X, data.y
    classes = _binary_classes(y)
    counts = [(y == c).sum() for c in classes]
    minority = classes[int(np.argmin(counts))]
    n_new = abs(counts[0] - counts[1])
    Xm = X[y == minority]
    synth = smote(Xm, min(k, Xm.shape[0] - 1), n_new, rng)
    frame = pd.concat(
        [data.features, pd.DataFrame(synth, columns=data.features.columns)], ignore_index=True
    )
    target = np.concatenate([y, np.full(n_new, minority, dtype=y.dtype)])
    return replace(data, features=frame, target=target)


def random_over_under(data: Dataset, target_pos_fraction, rng: RngStream):
    """Resample to ``target_pos_fraction`` positives at the original total size.

    A class that must grow keeps all its rows and draws the extra ones with
    replacement; a class that must shrink is subsampled without replacement.
    """
    if not 0 < target_pos_fraction < 1:
        raise DataError("target_pos_fraction must lie strictly between 0 and 1")
    y = data.y
    classes = _binary_classes(y)
    pos_label = classes[1]
    n = y.shape[0]
    want_pos = int(round(target_pos_fraction * n))
    want_pos = min(max(want_pos, 1), n - 1)
    g = rng.generator
    chosen = []
    for label, want in ((classes[0], n - want_pos), (pos_label, want_pos)):
        idx = np.flatnonzero(y == label)
        if want <= idx.shape[0]:
            chosen.append(np.sort(g.choice(idx, size=want, replace=False)))
        else:
            chosen.append(np.concatenate([idx, g.choice(idx, size=want - idx.shape[0], replace=True)]))
    return data.take(np.concatenate(chosen))


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------


def strata(target, task="classification", n_bins=10):
    """Stratum label per sample: the class, or an equal-count rank bin of the target."""
    t = np.asarray(target)
    if task == "classification":
        return t
    n = t.shape[0]
    n_bins = max(1, min(n_bins, n // 2))
    order = np.argsort(t, kind="stable")
    bins = np.empty(n, dtype=np.int64)
    bins[order] = np.arange(n) * n_bins // n
    return bins


def stratified_split(target, train_fraction, rng: RngStream, task="classification"):
    """Per-stratum random split; returns sorted ``(train_idx, holdout_idx)``."""
    if not 0 < train_fraction < 1:
        raise DataError("train_fraction must lie strictly between 0 and 1")
    s = strata(target, task)
    train, hold = [], []
    for label in np.unique(s):
        idx = np.flatnonzero(s == label)
        if idx.shape[0] < 2:
            raise DataError(f"stratum {label!r} has a single sample; cannot stratify")
        idx = rng.generator.permutation(idx)
        n_train = int(round(train_fraction * idx.shape[0]))
        n_train = min(max(n_train, 1), idx.shape[0] - 1)
        train.append(idx[:n_train])
        hold.append(idx[n_train:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(hold))


def stratified_folds(target, k, rng: RngStream, task="classification"):
    """Fold id per sample: shuffle within each stratum, then deal round-robin."""
    if k < 2:
        raise DataError("need at least 2 folds")
    s = strata(target, task)
    folds = np.empty(s.shape[0], dtype=np.int64)
    offset = 0
    for label in np.unique(s):
        idx = rng.generator.permutation(np.flatnonzero(s == label))
        folds[idx] = (offset + np.arange(idx.shape[0])) % k
        offset = (offset + idx.shape[0]) % k
    return folds


# ---------------------------------------------------------------------------
# Recipes
# ---------------------------------------------------------------------------

STRUCTURAL_OPS = {"drop_column", "map_values", "one_hot", "set_target"}
FITTED_OPS = {"standardize", "resample"}


@dataclass(frozen=True)
class Recipe:
    """Ordered preprocessing steps, each a dict with an ``op`` key."""

    steps: tuple = ()
    name: str = ""
    task: str = ""
    notes: tuple = field(default=())

    def __post_init__(self):
        steps = tuple(dict(s) for s in self.steps)
        for i, s in enumerate(steps):
            op = s.get("op")
            if op not in STRUCTURAL_OPS | FITTED_OPS:
                raise ConfigError(f"recipe step {i}: unknown op {op!r}")
        object.__setattr__(self, "steps", steps)

    @classmethod
    def from_dict(cls, d):
        notes = d.get("notes", ())
        return cls(tuple(d.get("steps", ())), d.get("name", ""), d.get("task", ""),
                   tuple([notes] if isinstance(notes, str) else notes))

    def to_dict(self):
        return {"name": self.name, "task": self.task, "notes": list(self.notes), "steps": list(self.steps)}

    def structural(self):
        return replace(self, steps=tuple(s for s in self.steps if s["op"] in STRUCTURAL_OPS))

    def fitted(self):
        return [s for s in self.steps if s["op"] in FITTED_OPS]


def builtin_recipes():
    root = resources.files("dbn_garson") / "recipes"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_recipe(name_or_path):
    """Load a recipe from a JSON file, or a shipped recipe by bare name."""
    p = Path(str(name_or_path))
    if p.suffix != ".json" and not p.exists():
        res = resources.files("dbn_garson") / "recipes" / f"{name_or_path}.json"
        if not res.is_file():
            raise ConfigError(f"unknown recipe {name_or_path!r}; shipped: {builtin_recipes()}")
        text = res.read_text(encoding="utf-8")
    else:
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read recipe {p}: {exc}") from exc
    try:
        return Recipe.from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"recipe {name_or_path}: invalid JSON ({exc})") from exc


def _columns_arg(data, step):
    cols = step.get("columns", step.get("column"))
    if cols is None:
        raise ConfigError(f"{step['op']} needs 'column' or 'columns'")
    return [cols] if isinstance(cols, str) else list(cols)


def apply_step(data: Dataset, step, rng: RngStream):
    op = step["op"]
    if op == "drop_column":
        return drop_columns(data, _columns_arg(data, step))
    if op == "map_values":
        for c in _columns_arg(data, step):
            data = map_values(data, c, step["mapping"])
        return data
    if op == "one_hot":
        for c in _columns_arg(data, step):
            cats = step.get("categories")
            data = one_hot(data, c, cats.get(c) if isinstance(cats, dict) else cats)
        return data
    if op == "set_target":
        return set_target(data, step["column"], step.get("transform"), step.get("positive"))
    if op == "standardize":
        cols = step.get("columns", "numeric")
        idx = numeric_columns(data) if cols == "numeric" else [data.column_index(c) for c in cols]
        if not idx:
            return data
        X, _ = standardize(data.X, idx, step.get("passthrough_constant", True))
        frame = pd.DataFrame(X, columns=data.features.columns)
        return replace(data, features=frame)
    if op == "resample":
        method = step.get("method", "smote")
        if method == "smote":
            return smote_balance(data, rng, step.get("k", 5))
        if method == "over_under":
            return random_over_under(data, step["positive_fraction"], rng)
        raise ConfigError(f"unknown resample method {method!r}")
    raise ConfigError(f"unknown op {op!r}")


def apply_recipe(raw: Dataset, recipe: Recipe, rng: RngStream | None = None):
    """Apply every step in order; failures name the step index and op."""
    rng = rng if rng is not None else RngStream(0)
    data = raw
    for i, step in enumerate(recipe.steps):
        try:
            data = apply_step(data, step, rng)
        except (DataError, ConfigError, KeyError) as exc:
            kind = ConfigError if isinstance(exc, (ConfigError, KeyError)) else DataError
            raise kind(f"recipe step {i} ({step.get('op')}): {exc}") from exc
    return data
