"""Greedy layer-wise deep-belief-network autoencoder.

The stack ends in a layer as wide as the input, so the chained weight
matrices map ``n`` features back onto ``n`` units; that chain is what the
Extended Garson attribution consumes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .attribution import ega
from .core import RngStream, as_matrix, check_rng
from .exceptions import DataError
from .rbm import RbmParams, RbmTrainConfig, hidden_activation, train_rbm


@dataclass(frozen=True)
class DbnaTrainConfig:
    hidden_sizes: tuple
    rbm_config: RbmTrainConfig = field(default_factory=RbmTrainConfig)

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.hidden_sizes)
        if not sizes or min(sizes) < 1:
            raise ValueError(f"hidden_sizes must be a non-empty list of positive ints, got {self.hidden_sizes}")
        object.__setattr__(self, "hidden_sizes", sizes)


@dataclass(frozen=True)
class DbnaModel:
    layers: tuple
    layer_sizes: tuple

    def __post_init__(self):
        layers = tuple(self.layers)
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) != len(layers) + 1:
            raise DataError(f"{len(layers)} layers need {len(layers) + 1} sizes, got {len(sizes)}")
        if sizes[0] != sizes[-1]:
            raise DataError(f"autoencoder must end at input width {sizes[0]}, ends at {sizes[-1]}")
        for i, p in enumerate(layers):
            if p.weights.shape != (sizes[i], sizes[i + 1]):
                raise DataError(f"layer {i} weights {p.weights.shape} != {(sizes[i], sizes[i + 1])}")
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "layer_sizes", sizes)

    @property
    def n_features(self):
        return self.layer_sizes[0]

    def to_dict(self):
        return {"layer_sizes": list(self.layer_sizes), "layers": [p.to_dict() for p in self.layers]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(RbmParams.from_dict(p) for p in d["layers"]), tuple(d["layer_sizes"]))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def train_dbna(data, config: DbnaTrainConfig, rng: RngStream, return_errors=False):
    """Train the stack greedily; layer ``l`` sees layer ``l-1``'s hidden probabilities."""
    data = as_matrix(data, "DBNA training data")
    sizes = (data.shape[1],) + config.hidden_sizes + (data.shape[1],)
    layers, errors = [], []
    inputs = data
    for i, layer_rng in enumerate(rng.spawn(len(sizes) - 1)):
        try:
            params, err = train_rbm(inputs, sizes[i + 1], config.rbm_config, layer_rng)
        except (DataError, ValueError) as exc:
            raise DataError(f"layer {i}: {exc}") from exc
        layers.append(params)
        errors.append(err)
        inputs = hidden_activation(inputs, params)
    model = DbnaModel(tuple(layers), sizes)
    return (model, errors) if return_errors else model


def forward_probabilities(model: DbnaModel, x):
    """Per-layer hidden probabilities of a bottom-up pass (length ``L`` list)."""
    out = []
    h = np.asarray(x, dtype=np.float64)
    for params in model.layers:
        h = hidden_activation(h, params)
        out.append(h)
    return out


def collect_weights(model: DbnaModel) -> list:
    """Copies of the weight matrices, input side first; biases are left out."""
    return [np.array(p.weights) for p in model.layers]


class DBNAutoencoder(TransformerMixin, BaseEstimator):
    """Stacked-RBM autoencoder with Extended Garson feature importances.

    Inputs are min-max rescaled to [0, 1] with statistics learned in
    :meth:`fit`; the final layer is as wide as the input.

    Parameters
    ----------
    hidden_sizes : sequence of int, default=(8,)
        Widths of the hidden layers before the final input-width layer,
        e.g. ``(75, 60, 75)`` builds the topology 91-75-60-75-91 on 91 inputs.
    learning_rate : float, default=0.2
    n_epochs : int, default=100
    cd_steps : int, default=1
    batch_size : int, default=32
    init_weight_scale : float, default=0.01
    zero_column : {"error", "uniform"}, default="error"
        Handling of dead units when normalising weights for attribution.
    random_state : int or RngStream, default=None

    Attributes
    ----------
    model_ : DbnaModel
    importance_ : ImportanceVector
    feature_importances_ : ndarray of shape (n_features,)
        Percent contribution of every input, summing to 100.
    reconstruction_errors_ : list of ndarray
        Per-layer, per-epoch reconstruction error of the greedy training.
    """

    def __init__(self, hidden_sizes=(8,), learning_rate=0.2, n_epochs=100, cd_steps=1,
                 batch_size=32, init_weight_scale=0.01, zero_column="error", random_state=None):
        self.hidden_sizes = hidden_sizes
        self.learning_rate = learning_rate
        self.n_epochs = n_epochs
        self.cd_steps = cd_steps
        self.batch_size = batch_size
        self.init_weight_scale = init_weight_scale
        self.zero_column = zero_column
        self.random_state = random_state

    def _config(self):
        rbm = RbmTrainConfig(self.learning_rate, self.n_epochs, self.cd_steps,
                             self.batch_size, self.init_weight_scale)
        return DbnaTrainConfig(tuple(self.hidden_sizes), rbm)

    def _rescale(self, X):
        return np.clip((X - self.data_min_) / self.data_range_, 0.0, 1.0)

    def fit(self, X, y=None, feature_names: Sequence[str] | None = None):
        if feature_names is None and hasattr(X, "columns"):
            feature_names = [str(c) for c in X.columns]
        X = check_array(X, dtype=np.float64)
        self.n_features_in_ = X.shape[1]
        self.data_min_ = X.min(axis=0)
        rng_ = X.max(axis=0) - self.data_min_
        self.data_range_ = np.where(rng_ > 0, rng_, 1.0)
        self.model_, self.reconstruction_errors_ = train_dbna(
            self._rescale(X), self._config(), check_rng(self.random_state), return_errors=True
        )
        self.importance_ = ega(collect_weights(self.model_), zero_column=self.zero_column,
                               feature_names=feature_names)
        self.feature_importances_ = self.importance_.scores
        return self

    @property
    def weights_(self):
        check_is_fitted(self, "model_")
        return collect_weights(self.model_)

    def transform(self, X):
        """Final-layer probabilities (the reconstruction-width output)."""
        return self.layer_outputs(X)[-1]

    def layer_outputs(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise DataError(f"X has {X.shape[1]} features, model expects {self.n_features_in_}")
        return forward_probabilities(self.model_, self._rescale(X))
