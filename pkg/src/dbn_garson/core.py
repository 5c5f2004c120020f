"""Shared numeric and tabular types: matrices, datasets, random streams, CSV IO."""

from __future__ import annotations

import numbers
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from .exceptions import DataError

COLUMN_KINDS = ("numeric", "categorical", "one_hot_derived")


# ---------------------------------------------------------------------------
# Matrices
# ---------------------------------------------------------------------------


def as_matrix(a, name="matrix"):
    """Return ``a`` as a finite, 2-D float64 array (a copy is not forced)."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DataError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DataError(f"{name} contains NaN or infinite entries")
    return m


def matmul(a, b):
    """Matrix product with shape checking and a finiteness guarantee."""
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise DataError(
            f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}: "
            f"inner dimensions {a.shape[1]} and {b.shape[0]} differ"
        )
    out = a @ b
    if not np.all(np.isfinite(out)):
        raise DataError("matrix product overflowed to a non-finite value")
    return out


# ---------------------------------------------------------------------------
# Random streams
# ---------------------------------------------------------------------------


class RngStream:
    """Seedable, splittable random stream backed by numpy's PCG64.

    Every consumer should receive its own child via :meth:`spawn` so that
    adding draws in one place never shifts the sequence seen elsewhere.
    """

    algorithm = "PCG64"

    def __init__(self, seed=0, *, _seed_sequence=None):
        if _seed_sequence is None:
            if not isinstance(seed, numbers.Integral) or seed < 0:
                raise ValueError(f"seed must be a non-negative integer, got {seed!r}")
            _seed_sequence = np.random.SeedSequence(int(seed))
        self._seed_sequence = _seed_sequence
        self.generator = np.random.Generator(np.random.PCG64(_seed_sequence))

    @property
    def seed(self):
        return self._seed_sequence.entropy

    @property
    def spawn_key(self):
        return tuple(self._seed_sequence.spawn_key)

    def spawn(self, n):
        return [RngStream(_seed_sequence=s) for s in self._seed_sequence.spawn(n)]

    def child(self):
        return self.spawn(1)[0]

    def __repr__(self):
        return f"RngStream(seed={self.seed}, algorithm={self.algorithm!r}, spawn_key={self.spawn_key})"


def check_rng(random_state):
    """Turn ``None``, an int, or an existing :class:`RngStream` into a stream."""
    if isinstance(random_state, RngStream):
        return random_state
    if random_state is None:
        return RngStream(0)
    return RngStream(random_state)


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str = "numeric"
    source: Optional[str] = None
    category: Optional[object] = None

    def __post_init__(self):
        if self.kind not in COLUMN_KINDS:
            raise DataError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == "one_hot_derived" and not self.source:
            raise DataError(f"one-hot column {self.name!r} must record its source column")


@dataclass(frozen=True)
class Dataset:
    """Feature table, optional target and per-column schema.

    ``features`` is a DataFrame so raw (pre-recipe) string categories can be
    carried; :attr:`X` gives the float64 matrix once every column is numeric.
    """

    features: pd.DataFrame
    target: Optional[np.ndarray] = None
    schema: tuple = field(default=())
    target_name: Optional[str] = None

    def __post_init__(self):
        feats = self.features.reset_index(drop=True)
        object.__setattr__(self, "features", feats)
        if not self.schema:
            object.__setattr__(self, "schema", infer_schema(feats))
        else:
            object.__setattr__(self, "schema", tuple(self.schema))
        names = [c.name for c in self.schema]
        if names != [str(c) for c in feats.columns]:
            raise DataError("schema names do not match feature columns")
        if len(set(names)) != len(names):
            raise DataError("duplicate column names in dataset")
        if self.target is not None:
            t = np.asarray(self.target)
            if t.ndim != 1 or t.shape[0] != feats.shape[0]:
                raise DataError(
                    f"target length {t.shape} does not match {feats.shape[0]} samples"
                )
            object.__setattr__(self, "target", t)

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def feature_names(self):
        return [c.name for c in self.schema]

    @property
    def X(self):
        bad = [c for c in self.features.columns if not pd.api.types.is_numeric_dtype(self.features[c])]
        if bad:
            raise DataError(f"non-numeric feature columns remain: {bad}")
        return as_matrix(self.features.to_numpy(dtype=np.float64), "features")

    @property
    def y(self):
        if self.target is None:
            raise DataError("dataset has no target column")
        return np.asarray(self.target)

    def column_index(self, name):
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise DataError(f"unknown column {name!r}") from None

    def take(self, indices):
        idx = np.asarray(indices, dtype=np.intp)
        target = None if self.target is None else self.target[idx]
        return replace(self, features=self.features.iloc[idx], target=target)

    def select(self, columns):
        """Restrict to the given column indices or names, keeping the target."""
        cols = [self.column_index(c) if isinstance(c, str) else int(c) for c in columns]
        names = [self.feature_names[i] for i in cols]
        return replace(
            self,
            features=self.features[names],
            schema=tuple(self.schema[i] for i in cols),
        )


def infer_schema(frame):
    specs = []
    for col in frame.columns:
        kind = "numeric" if pd.api.types.is_numeric_dtype(frame[col]) else "categorical"
        specs.append(ColumnSpec(str(col), kind))
    return tuple(specs)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def read_csv(path, target: Optional[str] = None) -> Dataset:
    """Load a headed, UTF-8, comma-separated file.

    Empty cells are rejected with their (1-based line, column) location; no
    imputation is attempted.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, encoding="utf-8", keep_default_na=False, na_values=[""],
                            float_precision="round_trip")
    except (OSError, UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    frame.columns = [str(c).strip() for c in frame.columns]
    missing = frame.isna().to_numpy()
    if missing.any():
        rows, cols = np.nonzero(missing)
        where = [f"line {r + 2}, column {frame.columns[c]!r}" for r, c in zip(rows[:5], cols[:5])]
        raise DataError(f"{path}: {missing.sum()} missing cell(s), first at " + "; ".join(where))
    if target is None:
        return Dataset(frame)
    if target not in frame.columns:
        raise DataError(f"{path}: target column {target!r} not found")
    y = frame.pop(target).to_numpy()
    return Dataset(frame, y, target_name=target)


def write_csv(dataset: Dataset, path):
    """Write features (and target, if present) so that :func:`read_csv` round-trips."""
    frame = dataset.features.copy()
    if dataset.target is not None:
        frame[dataset.target_name or "target"] = dataset.target
    # pandas writes floats with repr(), which round-trips float64 exactly.
    frame.to_csv(Path(path), index=False, encoding="utf-8")


def dataset_from_arrays(X, y=None, names: Optional[Sequence[str]] = None, target_name="target"):
    X = as_matrix(X, "X")
    if names is None:
        names = [f"x{i}" for i in range(X.shape[1])]
    frame = pd.DataFrame(X, columns=list(names))
    return Dataset(frame, None if y is None else np.asarray(y), target_name=target_name)
