"""Bonferroni decisions, confidence sets by inversion, two-sided covariate-effect p-values."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ispvalues import (
    DomainError,
    LogWeight,
    ObservedPoint,
    WeightedSample,
    bonferroni,
    invert_confidence_set,
    p_tilde,
    p_tilde_star,
    two_sided_combine,
    two_sided_rasch_pvalue,
)
from ispvalues.inference import PValueKind, RaschSample, confidence_set_from_pvalues
from ispvalues.oracle import binomial_se
from ispvalues.proposals.rasch import RaschMixture, rasch_log_weight
from ispvalues.proposals.tables import MarginFiber


class TestBonferroni:
    def test_threshold(self):
        assert bonferroni([0.004, 0.2], 0.05, 10).rejected == (0,)

    def test_nothing(self):
        assert bonferroni([1.0] * 5, 0.05).rejected == ()

    def test_boundary_is_rejected(self):
        assert bonferroni([0.05 / 7], 0.05, 7).rejected == (0,)

    def test_errors(self):
        with pytest.raises(DomainError):
            bonferroni([0.1], 1.5)
        with pytest.raises(DomainError):
            bonferroni([0.1, 0.2, 0.3], 0.05, 2)

    def test_fwer_with_uniform_pvalues(self, rng):
        runs, tests, alpha = 20_000, 50, 0.05
        p = rng.random((runs, tests))
        frac = np.mean([len(bonferroni(row, alpha).rejected) > 0 for row in p])
        assert frac <= alpha + 3 * float(binomial_se(alpha, runs))


class TestInversion:
    def test_all_retained(self):
        cs = invert_confidence_set([-1, 0, 1, 2], lambda th: 1.0, 0.05)
        assert cs.retained.all() and cs.hull == (-1.0, 2.0)

    def test_empty(self):
        cs = invert_confidence_set([-1, 0, 1], lambda th: 0.0, 0.05)
        assert cs.empty and cs.hull is None and cs.hull_length == 0.0

    def test_unimodal(self):
        pv = {-1: 0.01, 0: 0.5, 1: 0.01}
        cs = invert_confidence_set([-1, 0, 1], lambda th: pv[int(th)], 0.05)
        assert cs.retained.tolist() == [False, True, False]
        assert cs.hull == (0.0, 0.0) and cs.contiguous

    def test_noncontiguous_flag(self):
        cs = confidence_set_from_pvalues([0, 1, 2, 3], [0.5, 0.01, 0.5, 0.5], 0.05)
        assert not cs.contiguous and cs.hull == (0.0, 3.0)

    def test_threads_do_not_change_result(self):
        f = lambda th: float(np.exp(-th * th))
        grid = np.linspace(-3, 3, 61)
        a = invert_confidence_set(grid, f, 0.1)
        b = invert_confidence_set(grid, f, 0.1, threads=4)
        np.testing.assert_array_equal(a.pvalues, b.pvalues)

    def test_unsorted_grid(self):
        with pytest.raises(DomainError):
            invert_confidence_set([0, 2, 1], lambda th: 1.0, 0.05)

    def test_covers(self):
        cs = confidence_set_from_pvalues([0.0, 0.02, 0.04], [0.01, 0.5, 0.5], 0.05)
        assert cs.covers(0.02) and not cs.covers(0.0)
        with pytest.raises(DomainError):
            cs.covers(0.03)

    def test_serialization(self, tmp_path):
        cs = confidence_set_from_pvalues([0.0, 1.0, 2.0], [0.01, 0.5, 0.2], 0.05)
        d = json.loads(cs.to_json(tmp_path / "cs.json"))
        assert d["retained"] == [False, True, True] and d["hull"] == [1.0, 2.0]
        assert json.loads((tmp_path / "cs.json").read_text()) == d
        cs.to_csv(tmp_path / "cs.csv")
        lines = (tmp_path / "cs.csv").read_text().splitlines()
        assert lines[0] == "theta,pvalue,retained" and lines[2] == "1.0,0.5,1"


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=30), st.data())
def test_inversion_is_monotone(pvalues, data):
    bumps = data.draw(st.lists(st.floats(0, 1), min_size=len(pvalues), max_size=len(pvalues)))
    grid = np.arange(len(pvalues), dtype=float)
    low = confidence_set_from_pvalues(grid, pvalues, 0.05)
    high = confidence_set_from_pvalues(grid, np.minimum(np.add(pvalues, bumps), 1.0), 0.05)
    assert (high.retained | ~low.retained).all()


# ── two-sided p-values from one stored sample ──────────────────────── #


@pytest.fixture
def rasch_setup():
    rng = np.random.default_rng(8)
    x = (rng.random((6, 4)) < 0.5).astype(np.int8)
    x[0, 0], x[1, 0] = 1, 0
    v = rng.uniform(-1, 1, (6, 4))
    fiber = MarginFiber.from_matrix(x)
    mix = RaschMixture(fiber, v, np.linspace(-2, 2, 5))
    return x, v, mix


def test_combine_of_halves():
    assert two_sided_combine(0.5, 0.5) == 1.0


def test_corrected_dominates(rasch_setup):
    x, v, mix = rasch_setup
    grid = np.linspace(-3, 3, 31)
    for seed in range(5):
        sample = RaschSample.draw(mix, x, np.random.default_rng(seed), 60)
        assert (sample.two_sided(grid, "corrected") >= sample.two_sided(grid, "uncorrected")).all()


def test_matches_recomputation(rasch_setup):
    x, v, mix = rasch_setup
    sample = RaschSample.draw(mix, x, np.random.default_rng(42), 80)
    mats, _ = mix.sample(np.random.default_rng(42), 80)
    t = mix.statistic(mats)
    t_obs = mix.statistic(x)
    for theta in (-1.5, 0.0, 0.7, 2.4):
        lw = rasch_log_weight(theta, mats, mix)
        obs_lw = rasch_log_weight(theta, x, mix)
        tails = []
        for sign in (1, -1):
            s = WeightedSample(sign * t, lw, normalized=False)
            o = ObservedPoint(sign * t_obs, obs_lw)
            tails.append((p_tilde_star(o, s), p_tilde(sign * t_obs, s)))
        want_c = two_sided_combine(tails[0][0], tails[1][0])
        want_u = two_sided_combine(tails[0][1], tails[1][1])
        assert two_sided_rasch_pvalue(theta, sample, PValueKind.CORRECTED) == pytest.approx(want_c, rel=1e-12, abs=1e-15)
        assert two_sided_rasch_pvalue(theta, sample, PValueKind.UNCORRECTED) == pytest.approx(want_u, rel=1e-12, abs=1e-15)


def test_head_is_prefix(rasch_setup):
    x, v, mix = rasch_setup
    full = RaschSample.draw(mix, x, np.random.default_rng(1), 50)
    head = full.head(20)
    assert head.n == 20
    np.testing.assert_array_equal(head.stats, full.stats[:20])
