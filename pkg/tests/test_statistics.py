"""Test statistics: hand-computed values, batching and pooled transforms."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ispvalues import PooledTransform, ShapeError, StatisticKind, evaluate_statistic
from ispvalues.data import FINCH_MATRIX, STRUCTURED_OBSERVED_INDICES
from ispvalues.proposals.tables import structured_matrix_from_indices
from ispvalues.statistics import (
    column_index_sum,
    events_to_train,
    finch_s2bar,
    lag_count_minus,
    lag_count_plus,
    lag_counts,
    linear_covariate,
    median_diff,
    pooled_transform,
)


class TestMedianDiff:
    def test_hand_value(self):
        assert evaluate_statistic(StatisticKind.MEDIAN_DIFF, ((1, 2, 3, 10), (1, 1, 0, 0))) == -5.0

    def test_odd_groups(self):
        assert median_diff([5, 1, 9, 2, 7], [1, 1, 1, 0, 0]) == pytest.approx(5 - 4.5)

    def test_batch_matches_numpy_median(self, rng):
        values = rng.standard_cauchy(12)
        labels = np.zeros((30, 12), dtype=bool)
        for row in labels:
            row[rng.choice(12, 5, replace=False)] = True
        got = median_diff(values, labels)
        want = [np.median(values[row]) - np.median(values[~row]) for row in labels]
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)

    def test_ties_in_values(self):
        v = [1, 1, 1, 2, 2, 3]
        for lab in itertools.combinations(range(6), 3):
            mask = np.zeros(6, bool)
            mask[list(lab)] = True
            want = np.median(np.array(v)[mask]) - np.median(np.array(v)[~mask])
            assert median_diff(v, mask) == pytest.approx(want)

    def test_shape_errors(self):
        with pytest.raises(ShapeError):
            median_diff([1, 2, 3], [1, 0])
        with pytest.raises(ShapeError):
            median_diff([1, 2, 3], [1, 1, 1])


class TestLagCounts:
    def test_hand_enumeration(self):
        ti = events_to_train([0, 5], 10)
        tj = events_to_train([2, 6], 10)
        np.testing.assert_array_equal(lag_counts(ti, tj), [1, 1, 0, 0])
        assert evaluate_statistic(StatisticKind.LAG_COUNT_PLUS, ([0, 5], [2, 6]), length=10) == 1

    def test_against_pairwise_differences(self, rng):
        for _ in range(20):
            a = np.sort(rng.choice(40, 8, replace=False))
            b = np.sort(rng.choice(40, 9, replace=False))
            diffs = (b[None, :] - a[:, None]).ravel()
            want = [int(np.sum(diffs == d)) for d in (1, 2, 3, 4)]
            got = lag_counts(events_to_train(a, 40), events_to_train(b, 40))
            np.testing.assert_array_equal(got, want)
            assert lag_count_plus(events_to_train(a, 40), events_to_train(b, 40)) == max(want)
            assert lag_count_minus(events_to_train(a, 40), events_to_train(b, 40)) == -min(want)


class TestMatrixStatistics:
    def test_structured_observations(self):
        for ell in STRUCTURED_OBSERVED_INDICES:
            assert column_index_sum(structured_matrix_from_indices(ell)) == 2813

    def test_finch_value(self):
        assert round(finch_s2bar(FINCH_MATRIX), 1) == 53.1

    def test_finch_against_loops(self, rng):
        x = (rng.random((5, 7)) < 0.5).astype(int)
        m = x.shape[0]
        total = sum(int(x[i] @ x[j]) ** 2 for i in range(m) for j in range(m) if i != j)
        assert finch_s2bar(x) == pytest.approx(total / (m * (m - 1)))

    def test_linear_covariate(self, rng):
        x = (rng.random((4, 3)) < 0.5).astype(int)
        v = rng.normal(size=(4, 3))
        assert linear_covariate(x, v) == pytest.approx(sum(x[i, j] * v[i, j] for i in range(4) for j in range(3)))
        with pytest.raises(ShapeError):
            linear_covariate(x, v.T)

    def test_batch_equals_loop(self, rng):
        xs = (rng.random((6, 5, 8)) < 0.4).astype(np.int8)
        np.testing.assert_allclose(finch_s2bar(xs), [finch_s2bar(x) for x in xs])
        np.testing.assert_allclose(column_index_sum(xs), [column_index_sum(x) for x in xs])


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=15),
    st.sampled_from(list(PooledTransform)),
    st.randoms(use_true_random=False),
)
def test_pooled_transform_is_permutation_invariant(values, transform, rnd):
    """Swapping the observation with any draw permutes the transformed values the same way."""
    obs, stats = values[0], np.array(values[1:])
    t_obs, t_stats = pooled_transform(obs, stats, transform)
    k = rnd.randrange(len(stats))
    swapped = stats.copy()
    swapped[k] = obs
    s_obs, s_stats = pooled_transform(stats[k], swapped, transform)
    assert s_obs == pytest.approx(t_stats[k], rel=1e-12, abs=1e-12)
    assert s_stats[k] == pytest.approx(t_obs, rel=1e-12, abs=1e-12)


def test_rank_transform_preserves_order():
    t, s = pooled_transform(3.0, [1.0, 5.0, 3.0], "rank")
    assert t == 2.5 and list(s) == [1.0, 4.0, 2.5]
