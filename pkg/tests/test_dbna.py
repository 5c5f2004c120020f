import numpy as np
import pytest

from dbn_garson.attribution import ega
from dbn_garson.core import RngStream
from dbn_garson.dbna import (
    DBNAutoencoder, DbnaModel, DbnaTrainConfig, collect_weights, forward_probabilities, train_dbna,
)
from dbn_garson.exceptions import DataError
from dbn_garson.pipeline import generate_synthetic
from dbn_garson.rbm import RbmParams, RbmTrainConfig


def tiny_config(hidden=(3,), epochs=3):
    return DbnaTrainConfig(hidden, RbmTrainConfig(learning_rate=0.2, epochs=epochs, batch_size=8))


class TestTopology:
    def test_layer_sizes(self):
        X = np.random.default_rng(0).random((30, 5))
        model = train_dbna(X, tiny_config((4, 2, 4)), RngStream(0))
        assert model.layer_sizes == (5, 4, 2, 4, 5)
        assert [p.weights.shape for p in model.layers] == [(5, 4), (4, 2), (2, 4), (4, 5)]

    def test_loan_topology_shapes(self):
        X = np.random.default_rng(0).random((20, 91))
        model = train_dbna(X, tiny_config((75, 60, 75), epochs=1), RngStream(0))
        assert model.layer_sizes == (91, 75, 60, 75, 91)
        imp = ega(collect_weights(model))
        assert imp.scores.shape == (91,)
        assert abs(imp.scores.sum() - 100.0) < 1e-6

    def test_bad_hidden_sizes(self):
        with pytest.raises(ValueError):
            DbnaTrainConfig(())
        with pytest.raises(ValueError):
            DbnaTrainConfig((3, 0))

    def test_model_validates_chain(self):
        a = RbmParams.zeros(3, 2)
        with pytest.raises(DataError, match="input width"):
            DbnaModel((a,), (3, 2))


class TestTraining:
    def test_greedy_inputs(self):
        # the second layer must be trained on the first layer's hidden probabilities
        X = np.random.default_rng(1).random((25, 4))
        cfg = tiny_config((3,), epochs=2)
        model = train_dbna(X, cfg, RngStream(5))
        from dbn_garson.rbm import train_rbm
        r0, r1 = RngStream(5).spawn(2)
        p0, _ = train_rbm(X, 3, cfg.rbm_config, r0)
        np.testing.assert_array_equal(model.layers[0].weights, p0.weights)
        from dbn_garson.rbm import hidden_activation
        p1, _ = train_rbm(hidden_activation(X, p0), 4, cfg.rbm_config, r1)
        np.testing.assert_array_equal(model.layers[1].weights, p1.weights)

    def test_forward_probabilities(self):
        X = np.random.default_rng(2).random((10, 4))
        model = train_dbna(X, tiny_config((3,)), RngStream(0))
        outs = forward_probabilities(model, X)
        assert [o.shape for o in outs] == [(10, 3), (10, 4)]
        assert all(((o > 0) & (o < 1)).all() for o in outs)

    def test_save_load(self, tmp_path):
        X = np.random.default_rng(3).random((15, 3))
        model = train_dbna(X, tiny_config((2,)), RngStream(0))
        model.save(tmp_path / "m.json")
        back = DbnaModel.load(tmp_path / "m.json")
        for a, b in zip(model.layers, back.layers):
            np.testing.assert_array_equal(a.weights, b.weights)
            np.testing.assert_array_equal(a.hidden_bias, b.hidden_bias)

    def test_collect_weights_copies(self):
        X = np.random.default_rng(3).random((15, 3))
        model = train_dbna(X, tiny_config((2,)), RngStream(0))
        ws = collect_weights(model)
        ws[0][0, 0] = 99.0
        assert model.layers[0].weights[0, 0] != 99.0

    def test_layer_error_names_layer(self):
        with pytest.raises(DataError, match="layer 0"):
            train_dbna(np.array([[2.0, 0.0], [0.0, 1.0]]), tiny_config((2,)), RngStream(0))


class TestEstimator:
    def test_importances(self):
        data, _ = generate_synthetic(200, 2, 2, seed=0)
        est = DBNAutoencoder(hidden_sizes=(3,), n_epochs=5, random_state=0).fit(data.X, feature_names=data.feature_names)
        assert est.feature_importances_.shape == (4,)
        assert abs(est.feature_importances_.sum() - 100.0) < 1e-9
        assert est.importance_.names == tuple(data.feature_names)

    def test_deterministic(self):
        X = np.random.default_rng(0).normal(size=(50, 4))
        a = DBNAutoencoder(hidden_sizes=(3,), n_epochs=4, random_state=11).fit(X)
        b = DBNAutoencoder(hidden_sizes=(3,), n_epochs=4, random_state=11).fit(X)
        np.testing.assert_array_equal(a.feature_importances_, b.feature_importances_)

    def test_unscaled_input_accepted(self):
        X = np.random.default_rng(0).normal(loc=50, scale=10, size=(40, 3))
        est = DBNAutoencoder(hidden_sizes=(2,), n_epochs=2, random_state=0).fit(X)
        assert est.transform(X).shape == (40, 3)
        assert [o.shape[1] for o in est.layer_outputs(X)] == [2, 3]

    def test_width_checked(self):
        X = np.random.default_rng(0).random((20, 3))
        est = DBNAutoencoder(hidden_sizes=(2,), n_epochs=1, random_state=0).fit(X)
        with pytest.raises(DataError):
            est.transform(np.ones((2, 4)))

    def test_recovers_planted_features(self):
        hits = 0
        for seed in range(5):
            data, mask = generate_synthetic(500, 3, 3, seed=seed)
            est = DBNAutoencoder(hidden_sizes=(4,), random_state=seed).fit(data.X)
            hits += mask[est.importance_.ranking[:3]].sum() >= 2
        assert hits >= 4
