"""Connection-weight feature attribution.

The classic Garson partition for a one-hidden-layer network, and its
multi-layer extension for stacked autoencoders: every inter-layer weight
matrix is column-normalised by absolute value, the normalised matrices are
chained by matrix product into an ``n x n`` cumulative matrix, whose row sums
are rescaled to percentages.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import as_matrix
from .exceptions import DataError, NumericalError


@dataclass(frozen=True)
class ImportanceVector:
    """Per-feature importance in percent plus the descending ranking.

    Ties in the ranking are broken by ascending feature index.
    """

    scores: np.ndarray
    ranking: np.ndarray
    feature_names: Optional[tuple] = None

    @classmethod
    def from_scores(cls, scores, feature_names=None):
        scores = np.asarray(scores, dtype=np.float64)
        # stable sort on the negated scores keeps lower indices first among ties
        ranking = np.argsort(-scores, kind="stable")
        names = None if feature_names is None else tuple(str(n) for n in feature_names)
        if names is not None and len(names) != scores.shape[0]:
            raise DataError("feature_names length does not match scores")
        return cls(scores, ranking, names)

    @property
    def names(self):
        if self.feature_names is None:
            return tuple(f"f{i}" for i in range(self.scores.shape[0]))
        return self.feature_names

    def ranks(self):
        """1-based rank of every feature, aligned with ``scores``."""
        r = np.empty_like(self.ranking)
        r[self.ranking] = np.arange(1, self.ranking.shape[0] + 1)
        return r

    def to_rows(self):
        names, ranks = self.names, self.ranks()
        return [(names[i], float(self.scores[i]), int(ranks[i])) for i in self.ranking]

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["feature_name", "score_percent", "rank"])
            for name, score, rank in self.to_rows():
                w.writerow([name, repr(score), rank])

    def to_dict(self):
        return {
            "feature_names": list(self.names),
            "scores": [float(s) for s in self.scores],
            "ranking": [int(i) for i in self.ranking],
        }

    def to_json(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")

    @classmethod
    def read_csv(cls, path):
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        if not rows or not {"feature_name", "score_percent"} <= set(rows[0]):
            raise DataError(f"{path}: expected columns feature_name, score_percent, rank")
        if "rank" in rows[0]:
            rows.sort(key=lambda r: int(r["rank"]))
        return cls.from_scores([float(r["score_percent"]) for r in rows],
                               [r["feature_name"] for r in rows])


def normalize_columns(W, zero_column="error"):
    """Divide ``|W|`` by its column sums so every column sums to one.

    Parameters
    ----------
    W : array-like of shape (n_in, n_out)
    zero_column : {"error", "uniform"}
        What to do with a column whose weights are all zero (a dead unit).
        ``"uniform"`` assigns it ``1 / n_in`` in every row.
    """
    A = np.abs(as_matrix(W, "weight matrix"))
    sums = _exact_sums(A.T)
    dead = np.flatnonzero(sums == 0.0)
    if dead.size:
        if zero_column != "uniform":
            raise NumericalError(
                f"weight matrix column(s) {dead.tolist()} are all zero; "
                "normalisation is undefined (use zero_column='uniform' to override)"
            )
        A[:, dead] = 1.0
        sums[dead] = A.shape[0]
    return A / sums


def cumulative_weights(normalized: Sequence):
    """Left-to-right product of the normalised matrices (an ``n x n`` matrix)."""
    if len(normalized) == 0:
        raise DataError("need at least one weight matrix")
    mats = [as_matrix(m, f"matrix {i}") for i, m in enumerate(normalized)]
    for i in range(1, len(mats)):
        if mats[i - 1].shape[1] != mats[i].shape[0]:
            raise DataError(
                f"matrix {i} has {mats[i].shape[0]} rows but matrix {i - 1} "
                f"has {mats[i - 1].shape[1]} columns"
            )
    if mats[0].shape[0] != mats[-1].shape[1]:
        raise DataError(
            f"chain maps {mats[0].shape[0]} inputs to {mats[-1].shape[1]} outputs; "
            "an autoencoder chain must end at its input width"
        )
    cw = mats[0]
    for m in mats[1:]:
        cw = cw @ m
    return cw


def relative_contribution(cw):
    cw = as_matrix(cw, "cumulative weight matrix")
    if cw.shape[0] != cw.shape[1]:
        raise DataError(f"cumulative weight matrix must be square, got {cw.shape}")
    return _exact_sums(cw)


def _exact_sums(rows):
    # correctly rounded row sums do not depend on element order, which keeps
    # the attribution exactly equivariant under feature permutations
    return np.array([math.fsum(r) for r in rows], dtype=np.float64)


def relative_importance(rc, feature_names=None):
    rc = np.asarray(rc, dtype=np.float64)
    total = math.fsum(rc)
    if not total > 0:
        raise NumericalError("relative contributions sum to zero; importance undefined")
    return ImportanceVector.from_scores(100.0 * rc / total, feature_names)


def ega(weights: Sequence, zero_column="error", feature_names=None):
    """Extended Garson importance for a shape-chained list of weight matrices.

    >>> ega([[[1, 3], [2, 1]], [[2, 1], [2, 3]]]).scores
    array([59.375, 40.625])
    """
    normalized = [normalize_columns(W, zero_column=zero_column) for W in weights]
    cw = cumulative_weights(normalized)
    return relative_importance(relative_contribution(cw), feature_names)


def garson(W_ih, w_ho, feature_names=None):
    """Classic Garson importance of a single-hidden-layer network.

    ``W_ih`` is ``n_inputs x n_hidden`` and ``w_ho`` is ``n_hidden x n_outputs``
    (a 1-D vector is treated as a single output). With several outputs the
    per-hidden-unit shares are summed over the output units.
    """
    W_ih = as_matrix(W_ih, "input-hidden weights")
    w_ho = np.asarray(w_ho, dtype=np.float64)
    if w_ho.ndim == 1:
        w_ho = w_ho.reshape(-1, 1)
    w_ho = as_matrix(w_ho, "hidden-output weights")
    if W_ih.shape[1] != w_ho.shape[0]:
        raise DataError(
            f"input-hidden weights have {W_ih.shape[1]} hidden units but "
            f"hidden-output weights have {w_ho.shape[0]} rows"
        )
    shares = normalize_columns(W_ih) * np.abs(w_ho).sum(axis=1)
    return relative_importance(shares.sum(axis=1), feature_names)


def top_k(importance: ImportanceVector, k):
    """Indices of the ``k`` most important features and their summed percent."""
    n = importance.scores.shape[0]
    if not 1 <= k <= n:
        raise DataError(f"k must be in [1, {n}], got {k}")
    idx = [int(i) for i in importance.ranking[:k]]
    return idx, float(importance.scores[idx].sum())
