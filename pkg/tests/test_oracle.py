"""Ground-truth helpers: the weighted-rank inequality, exact enumeration, validity simulation."""

import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ispvalues import DomainError, TooLarge
from ispvalues.data import FINCH_MATRIX
from ispvalues.oracle import (
    DirectSamplingScenario,
    GaussianScenario,
    ValidityReport,
    Verdict,
    count_margin_fiber,
    enumerate_labelings,
    enumerate_margin_fiber,
    exact_permutation_pvalue,
    exact_structured_pvalue,
    exact_tilted_table_pvalue,
    gaussian_true_pvalue,
    lemma1_check,
    random_lemma1_instance,
    validity_monte_carlo,
)
from ispvalues.proposals.permutation import PermutationFiber
from ispvalues.proposals.tables import MarginFiber
from ispvalues.statistics import column_index_sum, finch_s2bar, median_diff


# ── weighted-rank inequality ─────────────────────────────────────────── #


class TestLemmaCheck:
    def test_boundary_case(self):
        lhs, holds = lemma1_check(np.arange(10.0), [Fraction(1, 10)] * 10, Fraction(3, 10))
        assert lhs == pytest.approx(0.3) and holds

    def test_float_tenths_are_exact_binary_values(self):
        # 0.1 in binary is slightly above 1/10, so three of them exceed the float 0.3
        lhs, holds = lemma1_check(np.arange(10.0), [0.1] * 10, 0.3)
        assert holds and lhs == pytest.approx(0.2)

    def test_huge_weights(self):
        assert lemma1_check([1.0, 2.0, 3.0], [5.0, 5.0, 5.0], 0.5) == (0.0, True)

    def test_ties_and_infinities(self):
        t = [np.inf, np.inf, -np.inf, 0.0, 0.0]
        w = [0.1, 0.1, 0.3, 0.0, 0.2]
        lhs, holds = lemma1_check(t, w, 0.4)
        # tails: inf group 0.2 <= 0.4, zero group 0.4 <= 0.4, -inf group 0.7
        assert lhs == pytest.approx(0.4) and holds

    def test_errors(self):
        with pytest.raises(DomainError):
            lemma1_check([1.0, 2.0], [0.5, -0.1], 0.3)
        with pytest.raises(DomainError):
            lemma1_check([float("nan")], [0.5], 0.3)

    def test_random_sweep(self, rng):
        assert all(lemma1_check(*random_lemma1_instance(rng))[1] for _ in range(2000))


@settings(max_examples=300, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.one_of(st.integers(-3, 3).map(float), st.sampled_from([-math.inf, math.inf])),
            st.one_of(st.just(0.0), st.floats(0, 2, allow_nan=False)),
        ),
        min_size=1,
        max_size=15,
    ),
    st.floats(0, 3, allow_nan=False),
)
def test_lemma_holds_for_arbitrary_inputs(pairs, alpha):
    t, w = zip(*pairs)
    assert lemma1_check(t, w, alpha)[1]


# ── permutation enumeration ─────────────────────────────────────────── #


class TestExactPermutation:
    def value_at_one(self, values, labels):
        return np.sum(np.asarray(values) * labels, axis=-1)

    def test_three_positions(self):
        fiber = PermutationFiber([1.0, 2.0, 3.0], 1)
        assert exact_permutation_pvalue(fiber, [False, False, True], self.value_at_one) == pytest.approx(1 / 3)

    def test_lowest_observation(self):
        fiber = PermutationFiber([1.0, 2.0, 3.0], 1)
        assert exact_permutation_pvalue(fiber, [True, False, False], self.value_at_one) == 1.0

    def test_against_full_permutations(self):
        values = np.array([0.3, -1.0, 2.5, 0.9, 1.7, -0.2])
        fiber = PermutationFiber(values, 3)
        labels = np.array([1, 0, 1, 0, 1, 0], dtype=bool)
        obs = median_diff(values, labels)
        perms = np.array([labels[list(p)] for p in itertools.permutations(range(6))])
        want = np.mean(median_diff(values, perms) >= obs)
        assert exact_permutation_pvalue(fiber, labels) == pytest.approx(want, abs=1e-15)

    def test_against_direct_sampling(self, rng):
        values = np.array([0.3, -1.0, 2.5, 0.9, 1.7, -0.2])
        fiber = PermutationFiber(values, 3)
        labels = np.array([1, 0, 1, 0, 1, 0], dtype=bool)
        exact = exact_permutation_pvalue(fiber, labels)
        n = 10**6
        est = np.mean(median_diff(values, fiber.uniform_sample(rng, n)) >= median_diff(values, labels))
        assert abs(est - exact) <= 4 * math.sqrt(exact * (1 - exact) / n)

    def test_too_large(self):
        with pytest.raises(TooLarge):
            exact_permutation_pvalue(PermutationFiber(np.arange(11.0), 3), np.arange(11) < 3)

    def test_labelings(self):
        lab = enumerate_labelings(5, 2)
        assert lab.shape == (10, 5) and len({r.tobytes() for r in lab}) == 10


# ── margin enumeration and counting ─────────────────────────────────── #


class TestMarginFiber:
    @pytest.mark.parametrize(
        "rows, cols, size", [((1, 1), (1, 1), 2), ((2, 0), (1, 1), 1), ((1, 1, 1), (1, 1, 1), 6)]
    )
    def test_small_counts(self, rows, cols, size):
        fiber = MarginFiber(rows, cols)
        mats = enumerate_margin_fiber(fiber)
        assert count_margin_fiber(rows, cols) == size == len(mats)
        assert fiber.contains(mats).all()

    def test_brute_force(self, rng):
        for _ in range(25):
            x = (rng.random((3, 4)) < 0.5).astype(np.int8)
            fiber = MarginFiber.from_matrix(x)
            every = np.array(list(itertools.product((0, 1), repeat=12)), dtype=np.int8).reshape(-1, 3, 4)
            want = int(fiber.contains(every).sum())
            mats = enumerate_margin_fiber(fiber)
            assert count_margin_fiber(fiber.row_sums, fiber.col_sums) == want == len(mats)
            assert len({m.tobytes() for m in mats}) == want

    def test_transpose_invariance(self):
        rows, cols = (3, 2, 2, 1, 2), (4, 1, 3, 2)
        assert count_margin_fiber(rows, cols) == count_margin_fiber(cols, rows)

    def test_finch_count(self):
        # the number of 0/1 matrices with the finch margins, as published for this data set
        x = np.asarray(FINCH_MATRIX)
        assert count_margin_fiber(x.sum(axis=1), x.sum(axis=0)) == 67149106137567626

    def test_limit(self):
        with pytest.raises(TooLarge):
            enumerate_margin_fiber(MarginFiber((2,) * 5, (2,) * 5), limit=100)

    def test_tilted_exact_pvalue(self, rng):
        fiber = MarginFiber((2, 2, 1), (2, 1, 1, 1))
        mats = enumerate_margin_fiber(fiber)
        v = rng.normal(size=(3, 4))
        stat = lambda m: np.einsum("...ij,ij->...", m, v)
        x = mats[3]
        logt = 0.9 * stat(mats)
        p = np.exp(logt) / np.exp(logt).sum()
        want = p[stat(mats) >= stat(x[None])[0]].sum()
        got = exact_tilted_table_pvalue(fiber, x, stat, lambda m: 0.9 * stat(m))
        assert got == pytest.approx(want, rel=1e-12)
        assert exact_tilted_table_pvalue(fiber, x, finch_s2bar) == pytest.approx(
            np.mean(finch_s2bar(mats) >= finch_s2bar(x))
        )


def test_structured_subset_sum_against_enumeration():
    cols, k = 10, 4
    sums = np.array([sum(c) for c in itertools.combinations(range(1, cols + 1), k)])
    for t in (10, 18, 22, 30, 34):
        assert exact_structured_pvalue(t, cols, k) == pytest.approx(np.mean(sums >= t), rel=1e-14)


def test_structured_value():
    assert exact_structured_pvalue(2813) == pytest.approx(0.107, abs=5e-4)


# ── Gaussian truth ──────────────────────────────────────────────────── #


class TestGaussianTruth:
    def test_center(self):
        assert gaussian_true_pvalue(0.0) == 0.5

    def test_quantile(self):
        mpmath = pytest.importorskip("mpmath")
        mpmath.mp.dps = 40
        for x in (1.6448536269514722, -2.3, 7.5, 30.0):
            want = float(mpmath.ncdf(-x))
            assert gaussian_true_pvalue(x) == pytest.approx(want, rel=1e-13, abs=1e-300)
        assert gaussian_true_pvalue(1.6448536269514722) == pytest.approx(0.05, abs=1e-12)

    def test_lower_limit(self):
        assert gaussian_true_pvalue(-40.0) == 1.0


# ── validity simulation ─────────────────────────────────────────────── #


class TestValidity:
    alphas = (0.01, 0.05, 0.1, 0.25, 0.5)

    def test_direct_sampling_valid(self):
        scen = DirectSamplingScenario(lambda rng, size: rng.standard_normal(size), 9)
        rep = validity_monte_carlo(scen, 50_000, self.alphas, seed=1)
        assert rep.valid
        # a continuous statistic with direct sampling is exact on the grid (n + 1 = 10)
        assert rep.cdf_hat[2] == pytest.approx(0.1, abs=4 * rep.se[2])

    def test_gaussian_liberal_uncorrected(self):
        rep = validity_monte_carlo(GaussianScenario(0.0, 0.2, 10, "p_hat"), 50_000, self.alphas, seed=2)
        assert rep.cdf_hat[1] > 0.1
        assert rep.verdicts[1] is Verdict.VIOLATION

    def test_gaussian_corrected_valid(self):
        for est in ("p_hat_star", "p_tilde_star"):
            assert validity_monte_carlo(GaussianScenario(0.0, 0.2, 10, est), 50_000, self.alphas, seed=3).valid

    def test_threads_do_not_change_result(self):
        scen = GaussianScenario(1.0, 1.0, 5)
        a = validity_monte_carlo(scen, 20_000, self.alphas, seed=4, chunk=3000)
        b = validity_monte_carlo(scen, 20_000, self.alphas, seed=4, chunk=3000, threads=4)
        np.testing.assert_array_equal(a.cdf_hat, b.cdf_hat)

    def test_report_serialization(self, tmp_path):
        rep = ValidityReport(np.array([0.1, 0.2]), np.array([0.3, 0.2]), np.array([0.01, 0.01]), 100, label="x")
        assert [v.value for v in rep.verdicts] == ["violation", "valid"]
        d = json.loads(rep.to_json(tmp_path / "r.json"))
        assert d["verdicts"] == ["violation", "valid"] and d["replications"] == 100
        rep.to_csv(tmp_path / "r.csv")
        assert (tmp_path / "r.csv").read_text().splitlines()[1] == "0.1,0.3,0.01,violation"
