"""Many two-sample permutation tests at once, with Bonferroni control.

Each dataset has ``m`` values of which ``r`` carry label 1. Under the null
all values are i.i.d. standard Cauchy; for the first ``false_nulls`` datasets
the label-1 values are shifted right by ``shift``. The statistic is the
difference in medians (label 1 minus label 0).

Five p-value approximations are compared:

* ``p_bar`` and ``p_bar_star``: uniform label permutations (weights 1);
* ``p_hat`` and ``p_hat_star``: the tilted permutation proposal;
* ``q_hat``: Wald upper limit for ``p_hat`` at level ``1 - alpha / (2 N)``.

The first four reject at ``p <= alpha / N``; ``q_hat`` rejects at
``q <= alpha / (2 N)``. For each ``n`` in the grid the first ``n`` draws of
one stored sample are used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..estimators import normal_quantile
from ..parallel import chunked_map
from ..proposals.permutation import PermutationFiber, TiltedPermutation
from ..statistics import median_diff
from .common import RunManifest, open_run

ESTIMATORS = ("p_bar", "p_bar_star", "p_hat", "p_hat_star", "q_hat")


@dataclass(frozen=True)
class MultiTestConfig:
    n_tests: int = 1000
    false_nulls: int = 10
    m: int = 100
    r: int = 40
    shift: float = 2.0
    theta: float = 3.0
    n_grid: tuple = (10, 200)
    alpha: float = 0.05
    repetitions: int = 20
    chunk: int = 50


@dataclass
class MultiTestResult:
    config: MultiTestConfig
    # counts[estimator][n] -> arrays over repetitions
    correct: dict = field(default_factory=dict)
    incorrect: dict = field(default_factory=dict)

    def rows(self):
        for rep in range(self.config.repetitions):
            for n in self.config.n_grid:
                for e in ESTIMATORS:
                    yield [rep, n, e, int(self.correct[e][n][rep]), int(self.incorrect[e][n][rep])]

    def summary(self):
        out = []
        for n in self.config.n_grid:
            for e in ESTIMATORS:
                c = self.correct[e][n]
                i = self.incorrect[e][n]
                out.append([n, e, float(np.mean(c)), float(np.mean(i)), int(np.sum(i == 0)), int(np.sum(i))])
        return out


def standard_cauchy(rng: np.random.Generator, size) -> np.ndarray:
    """Inverse-CDF draw: ``tan(pi (U - 1/2))``."""
    return np.tan(np.pi * (rng.random(size) - 0.5))


def dataset_pvalues(values, labels, cfg: MultiTestConfig, rng: np.random.Generator) -> dict:
    """All five approximations for one dataset, for every ``n`` in the grid."""
    fiber = PermutationFiber(values, cfg.r)
    t_obs = median_diff(values, labels)
    n_max = max(cfg.n_grid)
    direct = median_diff(values, fiber.uniform_sample(rng, n_max))
    prop = TiltedPermutation(fiber, cfg.theta)
    lab, log_q = prop.sample(rng, n_max)
    stats = median_diff(values, lab)
    w = np.exp(-fiber.log_size() - log_q)
    w_obs = math.exp(-fiber.log_size() - float(prop.logprob(labels)))
    z = float(normal_quantile(1 - cfg.alpha / (2 * cfg.n_tests)))
    out = {}
    for n in cfg.n_grid:
        k = int(np.sum(direct[:n] >= t_obs))
        terms = np.where(stats[:n] >= t_obs, w[:n], 0.0)
        ph = math.fsum(terms) / n
        se = float(np.std(terms, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        out[n] = {
            "p_bar": k / n,
            "p_bar_star": (1 + k) / (n + 1),
            "p_hat": ph,
            "p_hat_star": (w_obs + math.fsum(terms)) / (n + 1),
            "q_hat": ph + z * se,
        }
    return out


def run_multitest_sim(cfg: MultiTestConfig = MultiTestConfig(), seed: int = 0, threads: int = 1, out_dir=None) -> MultiTestResult:
    run = open_run(
        out_dir,
        RunManifest(
            "multitest",
            seed,
            cfg.repetitions,
            list(cfg.n_grid),
            {"n_tests_vs_reference": cfg.n_tests / 1e4},
            {k: getattr(cfg, k) for k in cfg.__dataclass_fields__},
            threads,
        ),
    )
    thr_p = cfg.alpha / cfg.n_tests
    thr_q = cfg.alpha / (2 * cfg.n_tests)
    res = MultiTestResult(cfg)
    for e in ESTIMATORS:
        res.correct[e] = {n: np.zeros(cfg.repetitions, dtype=int) for n in cfg.n_grid}
        res.incorrect[e] = {n: np.zeros(cfg.repetitions, dtype=int) for n in cfg.n_grid}

    for rep in range(cfg.repetitions):

        def job(rng, start, count):
            tallies = []
            for i in range(start, start + count):
                values = standard_cauchy(rng, cfg.m)
                labels = np.zeros(cfg.m, dtype=bool)
                labels[: cfg.r] = True
                if i < cfg.false_nulls:
                    values[labels] += cfg.shift
                pv = dataset_pvalues(values, labels, cfg, rng)
                tallies.append((i < cfg.false_nulls, pv))
            return tallies

        for chunk in chunked_map(job, cfg.n_tests, cfg.chunk, seed, f"multitest|{rep}", threads):
            for is_alt, pv in chunk:
                for n, vals in pv.items():
                    for e, p in vals.items():
                        rejected = p <= (thr_q if e == "q_hat" else thr_p)
                        if rejected:
                            (res.correct if is_alt else res.incorrect)[e][n][rep] += 1
    if run:
        run.write_csv("multitest_runs.csv", ["repetition", "n", "estimator", "correct", "incorrect"], res.rows())
        run.write_csv(
            "multitest_summary.csv",
            ["n", "estimator", "mean_correct", "mean_incorrect", "runs_without_false_rejection", "total_incorrect"],
            res.summary(),
        )
        run.finish()
    return res
