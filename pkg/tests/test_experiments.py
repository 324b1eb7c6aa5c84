"""Experiment runners at small scale: outputs, manifests and orderings."""

import json

import numpy as np
import pytest

from ispvalues.experiments.common import RunManifest, format_cell, open_run, svg_line_plot
from ispvalues.experiments.gaussian import gaussian_cdf, gaussian_mse, run_gaussian_cdf, run_gaussian_mse
from ispvalues.experiments.multitest import MultiTestConfig, run_multitest_sim, standard_cauchy
from ispvalues.experiments.pointprocess import PointProcessConfig, run_pointprocess_validity
from ispvalues.experiments.rasch import RaschSimConfig, _grid, run_rasch_ci
from ispvalues.experiments.tables import log_checkpoints, run_finch, run_structured_table, trajectory
from ispvalues.estimators import LogWeight, ObservedPoint, WeightedSample, p_hat, p_hat_star, p_tilde, p_tilde_star
from ispvalues.parallel import chunk_rng, chunked_map


def read_manifest(path):
    return json.loads((path / "manifest.json").read_text())


class TestParallel:
    def test_chunk_results_independent_of_threads(self):
        f = lambda rng, start, count: (start, rng.random(count).sum())
        a = chunked_map(f, 1000, 64, 7, "t")
        b = chunked_map(f, 1000, 64, 7, "t", threads=4)
        assert a == b and [s for s, _ in a] == list(range(0, 1000, 64))

    def test_streams_differ_by_tag_and_index(self):
        x = chunk_rng(1, "a", 0).random()
        assert x != chunk_rng(1, "b", 0).random()
        assert x != chunk_rng(1, "a", 1).random()
        assert x == chunk_rng(1, "a", 0).random()


class TestCommon:
    def test_manifest_lifecycle(self, tmp_path):
        run = open_run(tmp_path, RunManifest("demo", 3, 10))
        assert read_manifest(tmp_path)["status"] == "running"
        run.write_csv("t.csv", ["a", "b"], [[1, 0.1], [2, float("inf")]])
        run.finish()
        m = read_manifest(tmp_path)
        assert m["status"] == "complete" and m["outputs"] == ["t.csv"] and m["seed"] == 3
        assert (tmp_path / "t.csv").read_text() == "a,b\n1,0.1\n2,inf\n"

    def test_format_cell(self):
        assert format_cell(np.float64(0.1)) == "0.1"
        assert format_cell(True) == "1"
        assert format_cell(np.int64(4)) == "4"

    def test_svg(self):
        svg = svg_line_plot({"a": ([1, 10, 100], [0.1, 0.2, 0.3])}, title="t<1>", log_x=True, diagonal=True)
        assert svg.startswith("<svg") and "t&lt;1&gt;" in svg and "polyline" in svg


class TestGaussian:
    def test_mse_shrinks_with_n(self):
        small = gaussian_mse(0.0, 1.0, 10, 20_000, seed=1)
        large = gaussian_mse(0.0, 1.0, 1000, 20_000, seed=1)
        for f in ("p_hat", "p_hat_star"):
            assert 40 < small.mse[f] / large.mse[f] < 250
        # the two agree apart from the 1/(n+1) interpolation term
        assert large.mse["p_hat"] == pytest.approx(large.mse["p_hat_star"], rel=0.05)

    def test_conservative_regime(self):
        rep = gaussian_cdf(3.0, 1.0, 10, 20_000, seed=2, alphas=(0.5,))["p_hat_star"]
        assert rep.cdf_hat[0] + 3 * rep.se[0] < 0.5

    def test_well_matched_proposal_near_diagonal(self):
        reps = gaussian_cdf(0.0, 1.0, 1000, 20_000, seed=3, alphas=(0.05, 0.25, 0.5, 0.75))
        for rep in reps.values():
            assert (np.abs(rep.cdf_hat - rep.alphas) <= 3 * np.sqrt(rep.alphas * (1 - rep.alphas) / 20_000)).all()

    def test_outputs(self, tmp_path):
        run_gaussian_mse(((0.0, 1.0, 10),), 2000, 0, 1, tmp_path / "mse")
        lines = (tmp_path / "mse" / "gaussian_mse.csv").read_text().splitlines()
        assert len(lines) == 2 and lines[0].startswith("mu,sigma,n")
        run_gaussian_cdf(((0.0, 0.2, 10), (0.0, 0.2, 1000)), 2000, 0, 1, tmp_path / "cdf", alphas=(0.1, 0.5))
        m = read_manifest(tmp_path / "cdf")
        assert m["status"] == "complete"
        assert set(m["outputs"]) == {"gaussian_cdf.csv", "gaussian_cdf_mu0_sigma0.2.svg"}


class TestMultitest:
    cfg = MultiTestConfig(n_tests=60, false_nulls=5, m=30, r=12, n_grid=(10, 50), repetitions=2, chunk=16)

    def test_cauchy_quartiles(self, rng):
        x = standard_cauchy(rng, 200_000)
        assert np.quantile(x, [0.25, 0.5, 0.75]) == pytest.approx([-1, 0, 1], abs=0.02)

    def test_direct_corrected_cannot_reject_small_n(self):
        res = run_multitest_sim(self.cfg, seed=1)
        # p_bar_star >= 1 / (n + 1) > alpha / N whenever n + 1 < N / alpha
        for n in self.cfg.n_grid:
            assert res.correct["p_bar_star"][n].sum() == 0 and res.incorrect["p_bar_star"][n].sum() == 0

    def test_outputs_and_determinism(self, tmp_path):
        run_multitest_sim(self.cfg, 5, 1, tmp_path / "a")
        run_multitest_sim(self.cfg, 5, 3, tmp_path / "b")
        for name in ("multitest_runs.csv", "multitest_summary.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        assert len((tmp_path / "a" / "multitest_runs.csv").read_text().splitlines()) == 1 + 2 * 2 * 5


class TestRasch:
    def test_config_checks(self):
        with pytest.raises(ValueError):
            RaschSimConfig(alpha=(0.1,) * 30)
        with pytest.raises(ValueError):
            RaschSimConfig(theta_true=2.01)
        with pytest.raises(ValueError):
            RaschSimConfig(covariates=np.zeros((3, 3))).v()

    def test_grid(self):
        g = _grid(-1.0, 1.0, 0.5)
        assert g == (-1.0, -0.5, 0.0, 0.5, 1.0)

    def test_small_run(self, tmp_path):
        cfg = RaschSimConfig(
            replications=6, n_grid=(5, 20), grid=_grid(-2.0, 6.0, 0.1), mixture_thetas=_grid(-2.0, 6.0, 1.0), chunk=2
        )
        res = run_rasch_ci(cfg, seed=3, out_dir=tmp_path)
        assert len(res.records) + 4 * res.skipped == 4 * 6
        for n in cfg.n_grid:
            assert res.median_length(n, "corrected") >= res.median_length(n, "uncorrected")
        assert read_manifest(tmp_path)["status"] == "complete"


class TestTables:
    def test_checkpoints(self):
        assert log_checkpoints(1000) == [10, 20, 50, 100, 200, 500, 1000]
        assert log_checkpoints(300) == [10, 20, 50, 100, 200, 300]

    def test_trajectory_matches_estimators(self, rng):
        stats = rng.integers(0, 5, 200).astype(float)
        lw = rng.normal(size=200)
        lw[::7] = -np.inf
        rows = trajectory(3.0, 0.4, stats, lw, [10, 200])
        for row in rows:
            k = row["n"]
            s = WeightedSample(stats[:k], lw[:k])
            o = ObservedPoint(3.0, LogWeight(0.4))
            assert row["p_hat"] == pytest.approx(p_hat(3.0, s), rel=1e-12)
            assert row["p_tilde"] == pytest.approx(p_tilde(3.0, s), rel=1e-12)
            assert row["p_hat_star"] == pytest.approx(p_hat_star(o, s), rel=1e-12)
            assert row["p_tilde_star"] == pytest.approx(p_tilde_star(o, s), rel=1e-12)

    def test_structured_small(self, tmp_path):
        res = run_structured_table(n=500, direct_draws=20_000, seed=1, out_dir=tmp_path)
        assert res.observed_t == [2813.0, 2813.0]
        assert res.dominance_holds()
        assert abs(res.direct_p - res.exact_p) < 5 * res.direct_se
        assert {"table52_trajectory.csv", "table52_reference.csv", "table52_trajectory.svg"} <= set(
            read_manifest(tmp_path)["outputs"]
        )

    def test_finch_small(self, tmp_path):
        res = run_finch(n=2000, seed=1, out_dir=tmp_path)
        assert res.margins_match and round(res.observed_t, 1) == 53.1
        assert res.p_tilde_star.estimate >= res.p_tilde.estimate
        assert json.loads((tmp_path / "finch.json").read_text())["margins_match"] is True


class TestPointProcess:
    def test_small_run(self, tmp_path):
        cfg = PointProcessConfig(replications=500, n=20, chunk=100, alphas=(0.01, 0.1, 0.5))
        reps = run_pointprocess_validity(cfg, seed=2, out_dir=tmp_path)
        assert set(reps) == {("plus", "p_hat"), ("plus", "p_hat_star"), ("minus", "p_hat"), ("minus", "p_hat_star")}
        assert reps[("plus", "p_hat_star")].valid and reps[("minus", "p_hat_star")].valid
        lines = (tmp_path / "ppvalidity.csv").read_text().splitlines()
        assert len(lines) == 1 + 4 * 3

    def test_window_must_divide(self):
        from ispvalues import DomainError
        from ispvalues.experiments.pointprocess import pointprocess_pvalues
        from ispvalues.proposals.pointprocess import TiltSign

        with pytest.raises(DomainError):
            pointprocess_pvalues(PointProcessConfig(length=95), TiltSign.PLUS, np.random.default_rng(0), 2)
