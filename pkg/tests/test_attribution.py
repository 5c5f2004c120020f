import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dbn_garson.attribution import (
    ImportanceVector, cumulative_weights, ega, garson, normalize_columns,
    relative_contribution, relative_importance, top_k,
)
from dbn_garson.exceptions import DataError, NumericalError


def naive_ega(weights):
    """Scalar-loop reference: no numpy linear algebra, plain Python floats."""
    mats = []
    for W in weights:
        rows, cols = len(W), len(W[0])
        sums = [sum(abs(W[i][j]) for i in range(rows)) for j in range(cols)]
        mats.append([[abs(W[i][j]) / sums[j] for j in range(cols)] for i in range(rows)])
    cw = mats[0]
    for M in mats[1:]:
        cw = [[sum(cw[i][t] * M[t][j] for t in range(len(M))) for j in range(len(M[0]))]
              for i in range(len(cw))]
    rc = [sum(row) for row in cw]
    total = sum(rc)
    return [100.0 * r / total for r in rc]


@st.composite
def weight_chains(draw):
    n = draw(st.integers(1, 8))
    depth = draw(st.integers(1, 5))
    widths = [n] + [draw(st.integers(1, 8)) for _ in range(depth - 1)] + [n]
    seed = draw(st.integers(0, 2**32 - 1))
    g = np.random.default_rng(seed)
    # magnitudes bounded away from zero keep every column alive
    mats = [g.uniform(0.05, 2.0, size=(widths[i], widths[i + 1]))
            * g.choice([-1.0, 1.0], size=(widths[i], widths[i + 1]))
            for i in range(depth)]
    return mats


class TestHandTraces:
    W1 = [[1.0, 3.0], [2.0, 1.0]]
    W2 = [[2.0, 1.0], [2.0, 3.0]]

    def test_normalized_matrices(self):
        np.testing.assert_allclose(normalize_columns(self.W1), [[1 / 3, 0.75], [2 / 3, 0.25]], rtol=0, atol=1e-15)
        np.testing.assert_allclose(normalize_columns(self.W2), [[0.5, 0.25], [0.5, 0.75]], rtol=0, atol=1e-15)

    def test_cumulative_and_contribution(self):
        cw = cumulative_weights([normalize_columns(self.W1), normalize_columns(self.W2)])
        expected = [[1 / 6 + 0.375, 1 / 12 + 0.5625], [1 / 3 + 0.125, 1 / 6 + 0.1875]]
        np.testing.assert_allclose(cw, expected, rtol=0, atol=1e-15)
        np.testing.assert_allclose(relative_contribution(cw), [1.1875, 0.8125], rtol=0, atol=1e-15)

    def test_ega_percentages(self):
        imp = ega([self.W1, self.W2])
        np.testing.assert_allclose(imp.scores, [59.375, 40.625], rtol=0, atol=1e-12)
        np.testing.assert_array_equal(imp.ranking, [0, 1])

    def test_garson(self):
        imp = garson([[1, 2], [3, 4]], [[0.5], [1.0]])
        np.testing.assert_allclose(imp.scores, [30.5556, 69.4444], atol=1e-4)

    def test_garson_matches_two_layer_by_hand(self):
        # input shares: (1/4*0.5 + 1/3*1) and (3/4*0.5 + 2/3*1), total 1.5
        imp = garson([[1, 2], [3, 4]], [0.5, 1.0])
        np.testing.assert_allclose(imp.scores, [100 * (0.125 + 1 / 3) / 1.5, 100 * (0.375 + 2 / 3) / 1.5],
                                   rtol=0, atol=1e-12)


class TestErrors:
    def test_dead_column_raises(self):
        with pytest.raises(NumericalError, match="column"):
            normalize_columns([[0.0, 1.0], [0.0, 2.0]])

    def test_dead_column_uniform(self):
        np.testing.assert_allclose(normalize_columns([[0.0, 1.0], [0.0, 3.0]], zero_column="uniform"),
                                   [[0.5, 0.25], [0.5, 0.75]])

    def test_chain_mismatch_names_index(self):
        with pytest.raises(DataError, match="matrix 1"):
            cumulative_weights([np.ones((2, 3)), np.ones((2, 2))])

    def test_chain_not_square(self):
        with pytest.raises(DataError, match="input width"):
            cumulative_weights([np.ones((2, 3))])

    def test_empty_chain(self):
        with pytest.raises(DataError):
            cumulative_weights([])

    def test_zero_contribution(self):
        with pytest.raises(NumericalError):
            relative_importance([0.0, 0.0])

    def test_top_k_bounds(self):
        imp = ImportanceVector.from_scores([50.0, 50.0])
        with pytest.raises(DataError):
            top_k(imp, 3)
        with pytest.raises(DataError):
            top_k(imp, 0)


class TestImportanceVector:
    def test_ties_break_by_index(self):
        imp = ImportanceVector.from_scores([25.0, 50.0, 25.0])
        np.testing.assert_array_equal(imp.ranking, [1, 0, 2])
        np.testing.assert_array_equal(imp.ranks(), [2, 1, 3])

    def test_top_k(self):
        idx, cum = top_k(ImportanceVector.from_scores([75.0, 25.0, 0.0]), 2)
        assert idx == [0, 1]
        assert cum == 100.0

    def test_csv_round_trip(self, tmp_path):
        imp = ImportanceVector.from_scores([10.0, 60.0, 30.0], ["a", "b", "c"])
        imp.to_csv(tmp_path / "imp.csv")
        back = ImportanceVector.read_csv(tmp_path / "imp.csv")
        assert back.names == ("b", "c", "a")
        np.testing.assert_array_equal(back.scores, [60.0, 30.0, 10.0])

    def test_name_length_checked(self):
        with pytest.raises(DataError):
            ImportanceVector.from_scores([1.0, 2.0], ["a"])


class TestProperties:
    @settings(max_examples=200, deadline=None)
    @given(weight_chains())
    def test_sums_to_100(self, mats):
        assert abs(ega(mats).scores.sum() - 100.0) < 1e-6

    @settings(max_examples=200, deadline=None)
    @given(weight_chains(), st.integers(0, 2**32 - 1))
    def test_sign_invariance(self, mats, seed):
        g = np.random.default_rng(seed)
        flipped = [W * g.choice([-1.0, 1.0], size=W.shape) for W in mats]
        np.testing.assert_array_equal(ega(flipped).scores, ega(mats).scores)

    @settings(max_examples=200, deadline=None)
    @given(weight_chains(), st.integers(0, 2**32 - 1))
    def test_column_scale_invariance(self, mats, seed):
        g = np.random.default_rng(seed)
        scaled = [W * g.uniform(0.1, 10.0, size=W.shape[1]) for W in mats]
        np.testing.assert_allclose(ega(scaled).scores, ega(mats).scores, rtol=0, atol=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(weight_chains(), st.integers(0, 2**32 - 1))
    def test_permutation_equivariance(self, mats, seed):
        perm = np.random.default_rng(seed).permutation(mats[0].shape[0])
        permuted = [W.copy() for W in mats]
        permuted[0] = permuted[0][perm]
        permuted[-1] = permuted[-1][:, perm]
        np.testing.assert_array_equal(ega(permuted).scores, ega(mats).scores[perm])

    @settings(max_examples=200, deadline=None)
    @given(weight_chains())
    def test_naive_oracle(self, mats):
        ref = naive_ega([W.tolist() for W in mats])
        np.testing.assert_allclose(ega(mats).scores, ref, rtol=0, atol=1e-12)
