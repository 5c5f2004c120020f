"""Bernoulli-Bernoulli restricted Boltzmann machine trained by CD-k."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .core import RngStream, as_matrix, check_rng
from .exceptions import DataError


@dataclass(frozen=True)
class RbmTrainConfig:
    learning_rate: float = 0.1
    epochs: int = 50
    cd_steps: int = 1
    batch_size: int = 32
    init_weight_scale: float = 0.01
    # False: mean-field visible reconstructions (real-valued inputs);
    # True: binary visible samples, i.e. an exact block-Gibbs chain.
    sample_visible: bool = False

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        for name in ("epochs", "cd_steps", "batch_size"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")


@dataclass(frozen=True)
class RbmParams:
    weights: np.ndarray
    visible_bias: np.ndarray
    hidden_bias: np.ndarray

    def __post_init__(self):
        W = np.array(self.weights, dtype=np.float64)
        if W.ndim != 2:
            raise DataError(f"weights must be 2-D, got shape {W.shape}")
        bv = np.array(self.visible_bias, dtype=np.float64).reshape(-1)
        bh = np.array(self.hidden_bias, dtype=np.float64).reshape(-1)
        if bv.shape[0] != W.shape[0] or bh.shape[0] != W.shape[1]:
            raise DataError(
                f"bias shapes {bv.shape}, {bh.shape} inconsistent with weights {W.shape}"
            )
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(bv)) and np.all(np.isfinite(bh))):
            raise DataError("RBM parameters must be finite")
        for a in (W, bv, bh):
            a.setflags(write=False)
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "visible_bias", bv)
        object.__setattr__(self, "hidden_bias", bh)

    @property
    def n_visible(self):
        return self.weights.shape[0]

    @property
    def n_hidden(self):
        return self.weights.shape[1]

    @classmethod
    def zeros(cls, n_visible, n_hidden):
        return cls(np.zeros((n_visible, n_hidden)), np.zeros(n_visible), np.zeros(n_hidden))

    @classmethod
    def initialize(cls, n_visible, n_hidden, scale, rng: RngStream):
        W = rng.generator.uniform(-scale, scale, size=(n_visible, n_hidden))
        return cls(W, np.zeros(n_visible), np.zeros(n_hidden))

    def to_dict(self):
        return {
            "n_visible": self.n_visible,
            "n_hidden": self.n_hidden,
            "weights": self.weights.ravel().tolist(),
            "visible_bias": self.visible_bias.tolist(),
            "hidden_bias": self.hidden_bias.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        W = np.asarray(d["weights"], dtype=np.float64).reshape(d["n_visible"], d["n_hidden"])
        return cls(W, d["visible_bias"], d["hidden_bias"])


def hidden_activation(v, params: RbmParams):
    """``sigmoid(hidden_bias + v @ W)`` for a vector or a batch of rows."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != params.n_visible:
        raise DataError(f"expected {params.n_visible} visible values, got {v.shape[-1]}")
    return expit(params.hidden_bias + v @ params.weights)


def visible_activation(h, params: RbmParams):
    h = np.asarray(h, dtype=np.float64)
    if h.shape[-1] != params.n_hidden:
        raise DataError(f"expected {params.n_hidden} hidden values, got {h.shape[-1]}")
    return expit(params.visible_bias + h @ params.weights.T)


def sample_bernoulli(p, rng: RngStream):
    p = np.asarray(p, dtype=np.float64)
    return (rng.generator.random(p.shape) < p).astype(np.float64)


def cd_k_gradient(batch, params: RbmParams, k, rng: RngStream, sample_visible=False):
    """Summed CD-k statistics ``(dW, dbv, dbh)`` for one batch, unscaled.

    The positive phase uses hidden probabilities given the data. The chain
    starts from a hidden sample and alternates ``k`` times between visible
    reconstructions and sampled hidden states; the negative phase uses hidden
    probabilities given the final reconstruction. Visible reconstructions are
    probabilities unless ``sample_visible`` is set, in which case the chain is
    a true Gibbs sampler of the binary model.
    """
    v0 = np.asarray(batch, dtype=np.float64)
    ph0 = hidden_activation(v0, params)
    h = sample_bernoulli(ph0, rng)
    for step in range(k):
        vk = visible_activation(h, params)
        if sample_visible:
            vk = sample_bernoulli(vk, rng)
        phk = hidden_activation(vk, params)
        if step < k - 1:
            h = sample_bernoulli(phk, rng)
    dW = v0.T @ ph0 - vk.T @ phk
    dbv = (v0 - vk).sum(axis=0)
    dbh = (ph0 - phk).sum(axis=0)
    return dW, dbv, dbh


def cd_k_step(batch, params: RbmParams, config: RbmTrainConfig, rng: RngStream):
    batch = as_matrix(batch, "batch")
    if batch.shape[1] != params.n_visible:
        raise DataError(f"batch has {batch.shape[1]} columns, RBM has {params.n_visible} visible units")
    dW, dbv, dbh = cd_k_gradient(batch, params, int(config.cd_steps), rng,
                                 sample_visible=config.sample_visible)
    scale = config.learning_rate / batch.shape[0]
    return RbmParams(
        params.weights + scale * dW,
        params.visible_bias + scale * dbv,
        params.hidden_bias + scale * dbh,
    )


def reconstruction_error(data, params: RbmParams):
    """Mean squared error of the deterministic up-down pass."""
    recon = visible_activation(hidden_activation(data, params), params)
    return float(np.mean((data - recon) ** 2))


def _check_unit_interval(data):
    data = as_matrix(data, "RBM training data")
    if data.min() < 0.0 or data.max() > 1.0:
        raise DataError("RBM inputs must lie in [0, 1]; rescale before training")
    return data


def train_rbm(data, n_hidden, config: RbmTrainConfig, rng: RngStream):
    """Train an RBM and return ``(params, per_epoch_reconstruction_error)``."""
    data = np.asarray(data, dtype=np.float64)
    if data.size == 0 or data.ndim != 2 or data.shape[0] == 0:
        raise DataError("cannot train an RBM on empty data")
    data = _check_unit_interval(data)
    init_rng, order_rng, chain_rng = rng.spawn(3)
    params = RbmParams.initialize(data.shape[1], int(n_hidden), config.init_weight_scale, init_rng)
    n, bs = data.shape[0], int(config.batch_size)
    errors = []
    for _ in range(int(config.epochs)):
        order = order_rng.generator.permutation(n)
        for start in range(0, n, bs):
            params = cd_k_step(data[order[start:start + bs]], params, config, chain_rng)
        errors.append(reconstruction_error(data, params))
    return params, np.asarray(errors)


class BernoulliRBM(TransformerMixin, BaseEstimator):
    """Restricted Boltzmann machine with binary units, trained by CD-k.

    Inputs are treated as Bernoulli probabilities and must lie in [0, 1].

    Parameters
    ----------
    n_components : int, default=16
        Number of hidden units.
    learning_rate : float, default=0.1
    n_epochs : int, default=50
        Sweeps over the training set.
    cd_steps : int, default=1
        Gibbs steps per contrastive-divergence update.
    batch_size : int, default=32
    init_weight_scale : float, default=0.01
        Half-width of the zero-mean uniform weight initialisation.
    random_state : int or RngStream, default=None

    Attributes
    ----------
    params_ : RbmParams
    weights_ : ndarray of shape (n_features, n_components)
    reconstruction_errors_ : ndarray of shape (n_epochs,)
    """

    def __init__(self, n_components=16, learning_rate=0.1, n_epochs=50, cd_steps=1,
                 batch_size=32, init_weight_scale=0.01, random_state=None):
        self.n_components = n_components
        self.learning_rate = learning_rate
        self.n_epochs = n_epochs
        self.cd_steps = cd_steps
        self.batch_size = batch_size
        self.init_weight_scale = init_weight_scale
        self.random_state = random_state

    def _config(self):
        return RbmTrainConfig(self.learning_rate, self.n_epochs, self.cd_steps,
                              self.batch_size, self.init_weight_scale)

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.params_, self.reconstruction_errors_ = train_rbm(
            X, self.n_components, self._config(), check_rng(self.random_state)
        )
        self.n_features_in_ = X.shape[1]
        return self

    @property
    def weights_(self):
        check_is_fitted(self, "params_")
        return np.array(self.params_.weights)

    def transform(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=np.float64)
        return hidden_activation(X, self.params_)

    def reconstruct(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=np.float64)
        return visible_activation(self.transform(X), self.params_)
