import itertools

import numpy as np
import pytest

from driftxplain.assign import (
    associate_all,
    build_cost_matrix,
    dissimilarity_matrix,
    feature_difference,
    hungarian,
)
from driftxplain.errors import EmptyBinError, InfeasibleAssignmentError, ValidationError
from driftxplain.proto import CharacteristicSample, find_characteristic_samples
from driftxplain.synth import GmmSpec, sample_gmm

from conftest import make_dataset


def brute_force_cost(values):
    """Exhaustive minimum over injective row->column maps."""
    n, m = values.shape
    best = np.inf
    for cols in itertools.permutations(range(m), n):
        total = sum(values[r, c] for r, c in enumerate(cols))
        best = min(best, total)
    return best


def make_char(data, index):
    return CharacteristicSample(
        index=index,
        x=data.x[index],
        t=int(data.t[index]),
        i_value=0.5,
        prototype_index=0,
    )


class TestDissimilarityMatrix:
    def test_euclidean_vs_sqeuclidean(self):
        a = np.array([[0.0, 0.0], [3.0, 4.0]])
        b = np.array([[0.0, 0.0]])
        assert dissimilarity_matrix(a, b, "euclidean") == pytest.approx(
            np.array([[0.0], [5.0]])
        )
        assert dissimilarity_matrix(a, b, "sqeuclidean") == pytest.approx(
            np.array([[0.0], [25.0]])
        )

    def test_mahalanobis_whitens(self):
        a = np.array([[1.0, 0.0]])
        b = np.array([[0.0, 0.0]])
        omega = np.diag([4.0, 1.0])  # stretches the first axis by 2
        got = dissimilarity_matrix(a, b, "mahalanobis", omega)
        assert got == pytest.approx(np.array([[2.0]]))

    def test_mahalanobis_identity_matches_euclidean(self):
        rng = np.random.default_rng(0)
        a, b = rng.normal(size=(4, 3)), rng.normal(size=(5, 3))
        got = dissimilarity_matrix(a, b, "mahalanobis", np.eye(3))
        assert got == pytest.approx(dissimilarity_matrix(a, b, "euclidean"))

    def test_rejects_bad_inputs(self):
        a = np.zeros((2, 2))
        with pytest.raises(ValidationError):
            dissimilarity_matrix(a, a, "cosine")
        with pytest.raises(ValidationError):
            dissimilarity_matrix(a, a, "mahalanobis")  # matrix missing
        with pytest.raises(ValidationError):
            dissimilarity_matrix(a, a, "mahalanobis", np.eye(3))  # wrong shape
        with pytest.raises(ValidationError):
            dissimilarity_matrix(a, a, "mahalanobis", -np.eye(2))  # not pd


class TestHungarian:
    def test_identity_fixture(self):
        result = hungarian(np.array([[0.0, 5.0], [5.0, 0.0]]))
        assert [p.sample_index for p in result.pairs] == [0, 1]
        assert result.total_cost == 0.0

    def test_antidiagonal_fixture(self):
        result = hungarian(np.array([[4.0, 1.0], [1.0, 4.0]]))
        assert [p.sample_index for p in result.pairs] == [1, 0]
        assert result.total_cost == 2.0

    def test_rectangular_picks_cheap_columns(self):
        values = np.array([[9.0, 1.0, 9.0, 9.0], [9.0, 9.0, 9.0, 1.0]])
        result = hungarian(values)
        assert [p.sample_index for p in result.pairs] == [1, 3]
        assert result.total_cost == 2.0

    def test_ties_resolve_to_lower_columns(self):
        result = hungarian(np.zeros((2, 4)))
        assert [p.sample_index for p in result.pairs] == [0, 1]

    def test_matches_brute_force(self):
        rng = np.random.default_rng(11)
        for _ in range(60):
            n = int(rng.integers(1, 6))
            m = int(rng.integers(n, 7))
            values = rng.uniform(0.0, 10.0, size=(n, m)).round(2)
            result = hungarian(values)
            assert result.total_cost == pytest.approx(brute_force_cost(values))
            cols = [p.sample_index for p in result.pairs]
            assert len(set(cols)) == n

    def test_scaling_and_permutation_invariance(self):
        rng = np.random.default_rng(7)
        values = rng.uniform(0.0, 5.0, size=(4, 6))
        base = hungarian(values)
        scaled = hungarian(values * 3.5)
        assert [p.sample_index for p in scaled.pairs] == [p.sample_index for p in base.pairs]
        perm = rng.permutation(6)
        shuffled = hungarian(values[:, perm])
        assert shuffled.total_cost == pytest.approx(base.total_cost)

    def test_inf_never_selected(self):
        values = np.array([[np.inf, 2.0], [1.0, np.inf]])
        result = hungarian(values)
        assert [p.sample_index for p in result.pairs] == [1, 0]
        assert np.isfinite(result.total_cost)

    def test_infeasible_names_blocked_rows(self):
        values = np.array(
            [[1.0, np.inf, 2.0], [np.inf, np.inf, np.inf], [3.0, 4.0, 5.0]]
        )
        with pytest.raises(InfeasibleAssignmentError) as err:
            hungarian(values)
        assert tuple(err.value.blocked_rows) == (1,)

    def test_hall_violation_detected(self):
        # rows 0 and 1 both only tolerate column 0
        values = np.full((2, 3), np.inf)
        values[0, 0] = values[1, 0] = 1.0
        with pytest.raises(InfeasibleAssignmentError) as err:
            hungarian(values)
        assert len(err.value.blocked_rows) == 1

    def test_validation(self):
        with pytest.raises(ValidationError):
            hungarian(np.zeros((3, 2)))  # more rows than columns
        with pytest.raises(ValidationError):
            hungarian(np.array([[np.nan]]))
        with pytest.raises(ValidationError):
            hungarian(np.array([[-1.0]]))

    def test_empty(self):
        result = hungarian(np.empty((0, 4)))
        assert result.pairs == ()
        assert result.total_cost == 0.0


class TestBuildCostMatrix:
    def _data(self):
        x = np.array([[0.0], [1.0], [10.0], [11.0]])
        return make_dataset(x, [1, 1, 2, 2])

    def test_cross_bin_costs_are_distances(self):
        data = self._data()
        chars = [make_char(data, 0)]
        cm = build_cost_matrix(chars, data, target_bin=2)
        assert cm.values == pytest.approx(np.array([[10.0, 11.0]]))
        assert list(cm.col_indices) == [2, 3]

    def test_own_bin_pins_to_self(self):
        data = self._data()
        chars = [make_char(data, 0), make_char(data, 2)]
        cm = build_cost_matrix(chars, data, target_bin=2)
        # row 1 is archived in bin 2: only its own column stays open
        assert cm.values[1, 0] == 0.0
        assert np.isinf(cm.values[1, 1])
        result = hungarian(cm)
        by_row = {p.row: p for p in result.pairs}
        assert by_row[1].sample_index == 2
        assert by_row[1].char_index == 2

    def test_unarchived_own_bin_char_rejected(self):
        data = self._data()
        fake = CharacteristicSample(
            index=0, x=np.array([99.0]), t=2, i_value=0.1, prototype_index=0
        )
        # claims bin 2 but index 0 lives in bin 1
        with pytest.raises(ValidationError):
            build_cost_matrix([fake], data, target_bin=2)

    def test_missing_bin_raises(self):
        data = self._data()
        with pytest.raises(EmptyBinError):
            build_cost_matrix([make_char(data, 0)], data, target_bin=3)


class TestAssociateAll:
    def test_every_bin_reported(self):
        data, truth = sample_gmm(GmmSpec(seed=4), 200, rng_seed=1)
        chars = find_characteristic_samples(data, truth.i_true, rng_seed=0)
        results = associate_all(chars, data)
        assert sorted(results) == [1, 2]
        for t, res in results.items():
            assert res.target_bin == t
            assert len(res.pairs) == len(chars)
            for p in res.pairs:
                assert data.t[p.sample_index] == t
            # injective within the bin
            cols = [p.sample_index for p in res.pairs]
            assert len(set(cols)) == len(cols)

    def test_own_bin_assignment_is_identity(self):
        data, truth = sample_gmm(GmmSpec(seed=4), 200, rng_seed=1)
        chars = find_characteristic_samples(data, truth.i_true, rng_seed=0)
        results = associate_all(chars, data)
        for p in results[1].pairs:
            c = chars[p.row]
            if c.t == 1:
                assert p.sample_index == c.index
                assert p.cost == 0.0


class TestFeatureDifference:
    def test_signed_difference(self):
        data = make_dataset(np.array([[1.0, 2.0], [4.0, 0.0]]), [1, 2])
        char = make_char(data, 0)
        assert feature_difference(char, data.x[1]) == pytest.approx([3.0, -2.0])

    def test_dimension_mismatch(self):
        data = make_dataset(np.array([[1.0, 2.0], [4.0, 0.0]]), [1, 2])
        with pytest.raises(ValidationError):
            feature_difference(make_char(data, 0), np.zeros(3))
