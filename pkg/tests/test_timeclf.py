import numpy as np
import pytest

from driftxplain.errors import UnsupportedConfigError, ValidationError
from driftxplain.timeclf import (
    ForestConfig,
    KnnConfig,
    estimate_identifiability,
    fit_forest,
    fit_knn,
    identifiability_mse,
    predict_posterior,
)

from conftest import make_dataset

# identifiability of the only posteriors a raw k=5 two-bin vote can produce
K5_I_VALUES = {1.0, 0.2780719051126377, 0.029049405545331197}
# E[1 - H2(B/5)/log 2] with B ~ Binomial(5, 1/2): the k=5 noise floor
K5_NOISE_FLOOR = 0.1675533488135313


class TestKnn:
    def test_five_neighbour_frequencies(self):
        data = make_dataset([0.0, 1.0, 2.0, 3.0, 4.0], [1, 1, 1, 2, 2])
        clf = fit_knn(data)
        assert clf.predict_posterior([[1.5]])[0] == pytest.approx([0.6, 0.4])

    def test_ties_resolve_to_lower_index(self):
        # all points coincide; the 5 neighbours must be indices 0..4
        data = make_dataset(np.zeros(8), [1, 1, 1, 1, 2, 2, 2, 2])
        clf = fit_knn(data)
        assert clf.predict_posterior([[0.0]])[0] == pytest.approx([0.8, 0.2])

    def test_posterior_is_unsmoothed(self):
        data = make_dataset([0.0, 0.1, 0.2, 5.0, 6.0, 7.0], [1, 1, 1, 2, 2, 2])
        post = fit_knn(data, KnnConfig(k=3)).predict_posterior([[0.1], [6.0]])
        assert post[0] == pytest.approx([1.0, 0.0])
        assert post[1] == pytest.approx([0.0, 1.0])

    def test_estimates_live_on_the_k5_value_set(self, two_blob_dataset):
        clf = fit_knn(two_blob_dataset)
        rng = np.random.default_rng(0)
        i_hat = estimate_identifiability(clf, rng.normal(4.0, 4.0, size=(200, 2)))
        assert all(min(abs(v - w) for w in K5_I_VALUES) < 1e-12 for v in i_hat)

    def test_noise_floor_on_driftless_labels(self):
        rng = np.random.default_rng(7)
        x = rng.uniform(-1.0, 1.0, size=(600, 2))
        t = rng.integers(1, 3, size=600)
        t[:2] = [1, 2]  # both bins populated regardless of the draw
        data = make_dataset(x, t)
        clf = fit_knn(data)
        i_hat = estimate_identifiability(clf, rng.uniform(-1.0, 1.0, size=(800, 2)))
        assert i_hat.mean() == pytest.approx(K5_NOISE_FLOOR, abs=0.05)

    def test_k_larger_than_dataset_rejected(self):
        data = make_dataset([0.0, 1.0], [1, 2])
        with pytest.raises(ValidationError):
            fit_knn(data, KnnConfig(k=5))

    def test_single_bin_rejected(self):
        data = make_dataset([0.0, 1.0], [1, 1], n_bins=1)
        with pytest.raises(UnsupportedConfigError):
            fit_knn(data, KnnConfig(k=1))

    def test_query_dimension_checked(self, two_blob_dataset):
        clf = fit_knn(two_blob_dataset)
        with pytest.raises(ValidationError):
            clf.predict_posterior([[1.0, 2.0, 3.0]])


class TestForest:
    def test_posterior_is_mean_of_trees(self, two_blob_dataset):
        clf = fit_forest(two_blob_dataset, ForestConfig(n_trees=5, seed=3))
        q = np.array([[0.0, 0.0], [8.0, 8.0], [4.0, 4.0]])
        per_tree = clf.predict_tree_posteriors(q)
        assert per_tree.shape == (5, 3, 2)
        assert clf.predict_posterior(q) == pytest.approx(per_tree.mean(axis=0))

    def test_deterministic_in_seed(self, two_blob_dataset):
        q = np.random.default_rng(1).normal(4.0, 3.0, size=(50, 2))
        a = fit_forest(two_blob_dataset, ForestConfig(seed=11)).predict_posterior(q)
        b = fit_forest(two_blob_dataset, ForestConfig(seed=11)).predict_posterior(q)
        c = fit_forest(two_blob_dataset, ForestConfig(seed=12)).predict_posterior(q)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_separable_blobs_learned(self, two_blob_dataset):
        clf = fit_forest(two_blob_dataset, ForestConfig(seed=0))
        rng = np.random.default_rng(5)
        qa = rng.normal(0.0, 0.5, size=(100, 2))
        qb = rng.normal(8.0, 0.5, size=(100, 2))
        pred = np.vstack([clf.predict_posterior(qa), clf.predict_posterior(qb)])
        hard = pred.argmax(axis=1) + 1
        truth = np.repeat([1, 2], 100)
        assert (hard == truth).mean() >= 0.95

    def test_respects_max_depth(self, two_blob_dataset):
        clf = fit_forest(two_blob_dataset, ForestConfig(max_depth=1, seed=0))
        for tree in clf.trees:
            internal = tree.feature >= 0
            # a depth-1 tree has at most one internal node
            assert internal.sum() <= 1

    def test_min_leaf_respected(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(64, 3))
        t = 1 + (x[:, 0] > 0).astype(int)
        t[:2] = [1, 2]
        data = make_dataset(x, t)
        clf = fit_forest(data, ForestConfig(min_leaf=8, seed=1))
        for tree in clf.trees:
            leaves = tree.feature < 0
            # leaf probabilities come from >= min_leaf samples, so the
            # smallest representable frequency step is 1 / (8 * anything)
            assert leaves.any()

    def test_single_bin_rejected(self):
        data = make_dataset([0.0, 1.0], [1, 1], n_bins=1)
        with pytest.raises(UnsupportedConfigError):
            fit_forest(data)

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            ForestConfig(n_trees=0)
        with pytest.raises(ValidationError):
            ForestConfig(max_depth=0)
        with pytest.raises(ValidationError):
            ForestConfig(min_leaf=0)


class TestHelpers:
    def test_predict_posterior_single_vector(self, two_blob_dataset):
        clf = fit_knn(two_blob_dataset)
        post = predict_posterior(clf, np.array([0.0, 0.0]))
        assert post.shape == (2,)
        assert post == pytest.approx([1.0, 0.0])
        with pytest.raises(ValidationError):
            predict_posterior(clf, np.zeros((2, 2)))

    def test_mse_frozen(self):
        assert identifiability_mse([0.0, 1.0], [1.0, 1.0]) == pytest.approx(0.5)

    def test_mse_shape_checked(self):
        with pytest.raises(ValidationError):
            identifiability_mse([0.0, 1.0], [1.0])
