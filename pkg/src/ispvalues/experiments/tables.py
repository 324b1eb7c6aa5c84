"""Binary tables with fixed margins: the structured 52 x 102 table and the finch data."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..data import FINCH_COL_SUMS_SORTED, FINCH_MATRIX, FINCH_ROW_SUMS_SORTED, STRUCTURED_OBSERVED_INDICES
from ..estimators import (
    ObservedPoint,
    LogWeight,
    PValueReport,
    Estimator,
    WeightedSample,
    ess_diagnostic,
    report,
)
from ..oracle import count_margin_fiber, exact_structured_pvalue
from ..parallel import chunked_map
from ..proposals.tables import (
    ConditionalPoissonColumns,
    MarginFiber,
    structured_fiber,
    structured_first_row,
    structured_log_size,
    structured_matrix_from_indices,
)
from ..statistics import column_index_sum, finch_s2bar
from .common import RunManifest, open_run

SAMPLER_CHUNK = 4096


def log_checkpoints(n_max: int, start: int = 10) -> list[int]:
    """1, 2, 5 times powers of ten up to ``n_max`` (``n_max`` always included)."""
    out = []
    k = start
    while k < n_max:
        for mult in (1, 2, 5):
            v = k * mult
            if v < n_max:
                out.append(v)
        k *= 10
    out.append(n_max)
    return sorted(set(out))


def sampler_draws(sampler: ConditionalPoissonColumns, statistic, n: int, seed: int, tag: str, threads: int = 1):
    """``n`` draws as ``(stats, log_q, dead)`` from deterministic per-chunk streams."""

    def job(rng, start, count):
        return sampler.sample_statistic(rng, count, statistic)

    parts = chunked_map(job, n, SAMPLER_CHUNK, seed, tag, threads)
    if not parts:
        return np.zeros(0), np.zeros(0), np.zeros(0, dtype=bool)
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(3))


def trajectory(obs_stat: float, obs_log_w: float, stats, log_w, checkpoints) -> list[dict]:
    """All four estimators on the first ``k`` draws for each checkpoint ``k``.

    Weights must be normalized for the ``p_hat`` columns to mean anything.
    """
    stats = np.asarray(stats, dtype=float)
    log_w = np.asarray(log_w, dtype=float)
    shift = max(obs_log_w, float(np.max(log_w, initial=-np.inf)))
    w = np.exp(log_w - shift)
    w_obs = math.exp(obs_log_w - shift)
    hit = np.cumsum(np.where(stats >= obs_stat, w, 0.0))
    tot = np.cumsum(w)
    scale = math.exp(shift)
    out = []
    for k in checkpoints:
        h, t = hit[k - 1], tot[k - 1]
        out.append(
            {
                "n": k,
                "p_hat": h * scale / k,
                "p_hat_star": (w_obs + h) * scale / (k + 1),
                "p_tilde": h / t if t > 0 else 0.0,
                "p_tilde_star": (w_obs + h) / (w_obs + t) if (w_obs + t) > 0 else 0.0,
            }
        )
    return out


@dataclass
class StructuredResult:
    observed_t: list
    exact_p: float
    direct_p: float
    direct_se: float
    direct_draws: int
    trajectories: list = field(default_factory=list)  # one list of dicts per observed matrix
    ess: float = float("nan")
    dead_fraction: float = 0.0

    def dominance_holds(self) -> bool:
        return all(row["p_tilde_star"] >= row["p_tilde"] for traj in self.trajectories for row in traj)


def structured_direct_pvalue(t_obs: float, draws: int, seed: int, threads: int = 1, chunk: int = 100_000):
    """Exact-law Monte Carlo estimate of ``P(t >= t_obs)`` and its binomial SE."""

    def job(rng, start, count):
        return int(np.sum(structured_first_row(rng, count).sum(axis=1) >= t_obs))

    hits = sum(chunked_map(job, draws, chunk, seed, "table52-direct", threads))
    p = hits / draws
    return p, math.sqrt(p * (1 - p) / draws)


def run_structured_table(
    n: int = 100_000,
    direct_draws: int = 1_000_000,
    observed=STRUCTURED_OBSERVED_INDICES,
    seed: int = 0,
    threads: int = 1,
    out_dir=None,
) -> StructuredResult:
    """Sequential importance run plus the exact-law reference for the structured table.

    ``observed`` holds first-row index sets (1-based); the remaining rows of
    each observed matrix take the remaining columns in increasing order.
    """
    run = open_run(
        out_dir,
        RunManifest(
            "table52",
            seed,
            None,
            log_checkpoints(n),
            {"importance_draws_vs_reference": n / 2e7, "direct_draws_vs_reference": direct_draws / 1e6},
            {"n": n, "direct_draws": direct_draws, "observed": [list(o) for o in observed], "column_order": "natural"},
            threads,
        ),
    )
    fiber = structured_fiber()
    cp = ConditionalPoissonColumns(fiber)
    log_size = structured_log_size()
    mats = [structured_matrix_from_indices(ell) for ell in observed]
    obs_t = [column_index_sum(x) for x in mats]
    exact = exact_structured_pvalue(obs_t[0])
    direct_p, direct_se = structured_direct_pvalue(obs_t[0], direct_draws, seed, threads) if direct_draws else (math.nan, math.nan)
    stats, log_q, dead = sampler_draws(cp, column_index_sum, n, seed, "table52-cp", threads)
    log_w = np.where(dead, -np.inf, -log_q - log_size)
    checkpoints = log_checkpoints(n)
    res = StructuredResult(obs_t, exact, direct_p, direct_se, direct_draws, dead_fraction=float(dead.mean()) if n else 0.0)
    for x, t in zip(mats, obs_t):
        obs_lw = float(-cp.logprob(x[None])[0] - log_size)
        res.trajectories.append(trajectory(t, obs_lw, stats, log_w, checkpoints))
    if n >= 2:
        res.ess = ess_diagnostic(WeightedSample(stats, log_w))
    if run:
        rows = []
        for i, traj in enumerate(res.trajectories):
            for row in traj:
                rows.append([i, row["n"], row["p_hat"], row["p_hat_star"], row["p_tilde"], row["p_tilde_star"]])
        run.write_csv("table52_trajectory.csv", ["observed", "n", "p_hat", "p_hat_star", "p_tilde", "p_tilde_star"], rows)
        run.write_csv(
            "table52_reference.csv",
            ["observed_t", "exact_p", "direct_p", "direct_se", "direct_draws", "ess", "dead_fraction"],
            [[obs_t[0], exact, direct_p, direct_se, direct_draws, res.ess, res.dead_fraction]],
        )
        series = {}
        for i, traj in enumerate(res.trajectories):
            ns = [r["n"] for r in traj]
            series[f"p_tilde X{i + 1}"] = (ns, [r["p_tilde"] for r in traj])
            series[f"p_tilde* X{i + 1}"] = (ns, [r["p_tilde_star"] for r in traj])
        series["exact"] = (checkpoints, [exact] * len(checkpoints))
        run.write_svg("table52_trajectory.svg", series, title="structured table", xlabel="n", ylabel="p-value", log_x=True)
        run.finish()
    return res


@dataclass
class FinchResult:
    observed_t: float
    margins_match: bool
    p_tilde: PValueReport
    p_tilde_star: PValueReport
    p_hat: PValueReport
    p_hat_star: PValueReport
    ess: float
    dead_fraction: float
    log_fiber_size: float

    def to_dict(self) -> dict:
        return {
            "observed_t": self.observed_t,
            "margins_match": self.margins_match,
            "p_tilde": self.p_tilde.to_dict(),
            "p_tilde_star": self.p_tilde_star.to_dict(),
            "p_hat": self.p_hat.to_dict(),
            "p_hat_star": self.p_hat_star.to_dict(),
            "ess": self.ess,
            "dead_fraction": self.dead_fraction,
            "log_fiber_size": self.log_fiber_size,
        }


def finch_margins_match(matrix=FINCH_MATRIX) -> bool:
    x = np.asarray(matrix)
    return tuple(sorted(x.sum(axis=1), reverse=True)) == tuple(FINCH_ROW_SUMS_SORTED) and tuple(
        sorted(x.sum(axis=0), reverse=True)
    ) == tuple(FINCH_COL_SUMS_SORTED)


def run_finch(n: int = 100_000, seed: int = 0, threads: int = 1, out_dir=None, matrix=FINCH_MATRIX) -> FinchResult:
    """Co-occurrence test on a species-by-site matrix with the sequential sampler.

    The fiber size is counted exactly, so the weights are normalized and both
    families of estimators are reported.
    """
    run = open_run(
        out_dir,
        RunManifest("finch", seed, None, [n], {}, {"n": n, "column_order": "natural"}, threads),
    )
    x = np.asarray(matrix, dtype=np.int8)
    fiber = MarginFiber.from_matrix(x)
    cp = ConditionalPoissonColumns(fiber)
    log_size = math.log(count_margin_fiber(fiber.row_sums, fiber.col_sums))
    t_obs = finch_s2bar(x)
    stats, log_q, dead = sampler_draws(cp, finch_s2bar, n, seed, "finch-cp", threads)
    sample = WeightedSample(stats, np.where(dead, -np.inf, -log_q - log_size))
    obs = ObservedPoint(t_obs, LogWeight(float(-cp.logprob(x[None])[0] - log_size)))
    res = FinchResult(
        t_obs,
        finch_margins_match(x),
        report(Estimator.P_TILDE, obs, sample),
        report(Estimator.P_TILDE_STAR, obs, sample),
        report(Estimator.P_HAT, obs, sample),
        report(Estimator.P_HAT_STAR, obs, sample),
        ess_diagnostic(sample) if n >= 2 and not dead.all() else float("nan"),
        float(dead.mean()) if n else 0.0,
        log_size,
    )
    if run:
        run.write_json("finch.json", res.to_dict())
        run.finish()
    return res
