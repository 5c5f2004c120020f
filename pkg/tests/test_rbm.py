import itertools

import numpy as np
import pytest

from dbn_garson.core import RngStream
from dbn_garson.exceptions import DataError
from dbn_garson.rbm import (
    BernoulliRBM, RbmParams, RbmTrainConfig, cd_k_gradient, cd_k_step, hidden_activation,
    reconstruction_error, sample_bernoulli, train_rbm, visible_activation,
)


def exact_gradient(data, params):
    """Log-likelihood gradient by enumerating every joint (v, h) state."""
    W, bv, bh = params.weights, params.visible_bias, params.hidden_bias
    nv, nh = W.shape
    states = []
    for bits in itertools.product([0.0, 1.0], repeat=nv + nh):
        v, h = np.array(bits[:nv]), np.array(bits[nv:])
        states.append((v, h, np.exp(v @ W @ h + bv @ v + bh @ h)))
    Z = sum(s[2] for s in states)
    model_vh = sum(np.outer(v, h) * w for v, h, w in states) / Z
    model_v = sum(v * w for v, _, w in states) / Z
    model_h = sum(h * w for _, h, w in states) / Z
    ph = 1.0 / (1.0 + np.exp(-(bh + data @ W)))
    n = data.shape[0]
    return (data.T @ ph / n - model_vh, data.mean(axis=0) - model_v, ph.mean(axis=0) - model_h)


@pytest.fixture
def small_params():
    return RbmParams(np.array([[1.2, -0.8], [0.5, 1.5]]), np.array([-0.5, 0.3]), np.array([0.2, -0.4]))


class TestActivations:
    def test_hidden_activation(self, small_params):
        v = np.array([[1.0, 0.0]])
        np.testing.assert_allclose(hidden_activation(v, small_params),
                                   1 / (1 + np.exp(-np.array([[1.4, -1.2]]))), rtol=1e-15)

    def test_visible_activation(self, small_params):
        h = np.array([[0.0, 1.0]])
        np.testing.assert_allclose(visible_activation(h, small_params),
                                   1 / (1 + np.exp(-np.array([[-1.3, 1.8]]))), rtol=1e-15)

    def test_sample_bernoulli_extremes(self):
        r = RngStream(0)
        np.testing.assert_array_equal(sample_bernoulli(np.array([0.0, 1.0, 0.0]), r), [0.0, 1.0, 0.0])

    def test_sample_bernoulli_mean(self):
        s = sample_bernoulli(np.full(100_000, 0.3), RngStream(1))
        assert abs(s.mean() - 0.3) < 0.01


class TestParams:
    def test_read_only(self, small_params):
        with pytest.raises(ValueError):
            small_params.weights[0, 0] = 3.0

    def test_dict_round_trip(self, small_params):
        back = RbmParams.from_dict(small_params.to_dict())
        np.testing.assert_array_equal(back.weights, small_params.weights)
        np.testing.assert_array_equal(back.hidden_bias, small_params.hidden_bias)

    def test_initialize_scale(self):
        p = RbmParams.initialize(10, 5, 0.01, RngStream(0))
        assert p.weights.shape == (10, 5)
        assert np.abs(p.weights).max() <= 0.01


class TestContrastiveDivergence:
    def test_large_k_matches_exact_gradient(self, small_params):
        data = np.array([[1.0, 1.0]] * 6 + [[1.0, 0.0]] * 2 + [[0.0, 0.0]] * 2)
        batch = np.repeat(data, 5, axis=0)
        exact = np.concatenate([g.ravel() for g in exact_gradient(batch, small_params)])
        rng = RngStream(42)
        total = np.zeros_like(exact)
        n_steps = 1000
        for _ in range(n_steps):
            dW, dbv, dbh = cd_k_gradient(batch, small_params, 25, rng, sample_visible=True)
            total += np.concatenate([dW.ravel(), dbv, dbh]) / batch.shape[0]
        approx = total / n_steps
        rel = np.linalg.norm(approx - exact) / np.linalg.norm(exact)
        assert rel < 0.10

    def test_gradient_zero_at_model_fixed_point(self):
        # with zero parameters and data at the model mean (v uniform), every update averages to zero
        params = RbmParams.zeros(2, 2)
        batch = np.array(list(itertools.product([0.0, 1.0], repeat=2)) * 50)
        exact = exact_gradient(batch, params)
        for g in exact:
            np.testing.assert_allclose(g, 0.0, atol=1e-15)

    def test_step_scaling(self, small_params):
        batch = np.array([[1.0, 0.0], [0.0, 1.0]])
        cfg = RbmTrainConfig(learning_rate=0.5, cd_steps=1)
        new = cd_k_step(batch, small_params, cfg, RngStream(3))
        dW, dbv, dbh = cd_k_gradient(batch, small_params, 1, RngStream(3))
        np.testing.assert_allclose(new.weights, small_params.weights + 0.25 * dW, rtol=1e-15)
        np.testing.assert_allclose(new.visible_bias, small_params.visible_bias + 0.25 * dbv, rtol=1e-15)

    def test_width_checked(self, small_params):
        with pytest.raises(DataError):
            cd_k_step(np.ones((2, 3)), small_params, RbmTrainConfig(), RngStream(0))


class TestTraining:
    def test_rejects_out_of_range(self):
        with pytest.raises(DataError, match=r"\[0, 1\]"):
            train_rbm(np.array([[0.0, 2.0]]), 2, RbmTrainConfig(), RngStream(0))

    def test_rejects_empty(self):
        with pytest.raises(DataError):
            train_rbm(np.empty((0, 3)), 2, RbmTrainConfig(), RngStream(0))

    def test_deterministic(self):
        X = np.random.default_rng(0).random((60, 5))
        a, ea = train_rbm(X, 3, RbmTrainConfig(epochs=5), RngStream(9))
        b, eb = train_rbm(X, 3, RbmTrainConfig(epochs=5), RngStream(9))
        np.testing.assert_array_equal(a.weights, b.weights)
        np.testing.assert_array_equal(ea, eb)

    def test_reconstruction_improves(self):
        g = np.random.default_rng(1)
        protos = np.array([[1, 1, 1, 0, 0, 0], [0, 0, 0, 1, 1, 1]], dtype=float)
        X = protos[g.integers(0, 2, 300)]
        params, errors = train_rbm(X, 4, RbmTrainConfig(learning_rate=0.1, epochs=30), RngStream(2))
        assert errors[-1] < 0.5 * errors[0]
        assert reconstruction_error(X, params) == pytest.approx(errors[-1])


class TestEstimator:
    def test_fit_transform_shapes(self):
        X = np.random.default_rng(0).random((40, 6))
        rbm = BernoulliRBM(n_components=3, n_epochs=3, random_state=0)
        H = rbm.fit_transform(X)
        assert H.shape == (40, 3)
        assert rbm.weights_.shape == (6, 3)
        assert rbm.reconstruct(X).shape == X.shape

    def test_get_params(self):
        assert BernoulliRBM(n_components=7).get_params()["n_components"] == 7
