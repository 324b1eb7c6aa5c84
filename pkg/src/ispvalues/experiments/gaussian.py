"""Normal(0, 1) target with Normal(mu, sigma) proposals: MSE and null CDFs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..oracle import ESTIMATOR_FIELDS, GaussianScenario, ValidityReport, binomial_se, gaussian_true_pvalue
from ..parallel import chunked_map
from .common import RunManifest, open_run

MUS = (0.0, 3.0, -3.0)
SIGMAS = (0.2, 1.0, 5.0)
DEFAULT_MSE_CONFIGS = tuple((mu, s, n) for mu in MUS for s in SIGMAS for n in (10, 1000))
DEFAULT_CDF_CONFIGS = tuple((mu, s, n) for mu in MUS for s in SIGMAS for n in (10, 1000))
CDF_ALPHAS = tuple(np.round(np.arange(1, 101) / 100, 2))

LABELS = {"p_hat": "p_hat", "p_tilde": "p_tilde", "p_hat_star": "p_hat*", "p_tilde_star": "p_tilde*"}


def _chunk_for(n: int) -> int:
    # keeps one chunk's proposal block near 16 MB
    return int(max(100, min(20_000, 2_000_000 // max(n, 1))))


@dataclass(frozen=True)
class MSERow:
    mu: float
    sigma: float
    n: int
    mse: dict
    se: dict

    def cells(self):
        out = [self.mu, self.sigma, self.n]
        for f in ESTIMATOR_FIELDS:
            out += [self.mse[f], self.se[f]]
        return out


def gaussian_mse(mu: float, sigma: float, n: int, replications: int, seed: int, threads: int = 1) -> MSERow:
    """MSE of each estimator against ``1 - Phi(X)``.

    ``p_hat`` and ``p_hat_star`` are clamped at 1 before squaring; the two
    self-normalized estimators never exceed 1.
    """
    scen = GaussianScenario(mu, sigma, n)

    def job(rng, start, count):
        x, est = scen.all_estimates(rng, count)
        truth = gaussian_true_pvalue(x)
        sq = np.stack([(np.minimum(getattr(est, f), 1.0) - truth) ** 2 for f in ESTIMATOR_FIELDS])
        return sq.sum(axis=1), (sq**2).sum(axis=1)

    parts = chunked_map(job, replications, _chunk_for(n), seed, f"gauss-mse|{mu!r}|{sigma!r}|{n}", threads)
    s1 = np.sum([p[0] for p in parts], axis=0)
    s2 = np.sum([p[1] for p in parts], axis=0)
    mean = s1 / replications
    var = np.maximum(s2 / replications - mean**2, 0.0)
    se = np.sqrt(var / replications)
    return MSERow(mu, sigma, n, dict(zip(ESTIMATOR_FIELDS, mean)), dict(zip(ESTIMATOR_FIELDS, se)))


def run_gaussian_mse(configs=DEFAULT_MSE_CONFIGS, replications: int = 100_000, seed: int = 0, threads: int = 1, out_dir=None):
    """MSE table over ``(mu, sigma, n)`` configurations."""
    run = open_run(
        out_dir,
        RunManifest(
            "gaussian-mse",
            seed,
            replications,
            sorted({c[2] for c in configs}),
            {"replications_vs_reference": replications / 1e6},
            {"configs": [list(c) for c in configs]},
            threads,
        ),
    )
    rows = [gaussian_mse(mu, s, n, replications, seed, threads) for mu, s, n in configs]
    if run:
        header = ["mu", "sigma", "n"]
        for f in ESTIMATOR_FIELDS:
            header += [f"mse_{f}", f"se_{f}"]
        run.write_csv("gaussian_mse.csv", header, (r.cells() for r in rows))
        run.finish()
    return rows


def gaussian_cdf(mu, sigma, n, replications, seed, threads=1, alphas=CDF_ALPHAS, k=3.0) -> dict[str, ValidityReport]:
    """Null CDF ``P(p <= alpha)`` of all four estimators for one configuration."""
    alphas = np.asarray(alphas, dtype=float)
    scen = GaussianScenario(mu, sigma, n)

    def job(rng, start, count):
        _, est = scen.all_estimates(rng, count)
        return np.stack([(getattr(est, f)[:, None] <= alphas[None, :]).sum(axis=0) for f in ESTIMATOR_FIELDS])

    hits = np.sum(chunked_map(job, replications, _chunk_for(n), seed, f"gauss-cdf|{mu!r}|{sigma!r}|{n}", threads), axis=0)
    out = {}
    for f, h in zip(ESTIMATOR_FIELDS, hits):
        cdf = h / replications
        out[f] = ValidityReport(alphas, cdf, binomial_se(cdf, replications), replications, k, f"{f} mu={mu} sigma={sigma} n={n}")
    return out


def run_gaussian_cdf(
    configs=DEFAULT_CDF_CONFIGS, replications: int = 100_000, seed: int = 0, threads: int = 1, out_dir=None, alphas=CDF_ALPHAS
):
    """CDF tables for every configuration; returns ``{(mu, sigma, n): {estimator: report}}``."""
    run = open_run(
        out_dir,
        RunManifest(
            "gaussian-cdf",
            seed,
            replications,
            sorted({c[2] for c in configs}),
            {"replications_vs_reference": replications / 1e6},
            {"configs": [list(c) for c in configs], "alphas": list(alphas)},
            threads,
        ),
    )
    results = {(mu, s, n): gaussian_cdf(mu, s, n, replications, seed, threads, alphas) for mu, s, n in configs}
    if run:
        rows = []
        for (mu, s, n), reps in results.items():
            for f, rep in reps.items():
                for a, c, e, v in zip(rep.alphas, rep.cdf_hat, rep.se, rep.verdicts):
                    rows.append([mu, s, n, f, a, c, e, v.value])
        run.write_csv("gaussian_cdf.csv", ["mu", "sigma", "n", "estimator", "alpha", "cdf", "se", "verdict"], rows)
        for mu, s in sorted({(c[0], c[1]) for c in configs}):
            series = {}
            for (m2, s2, n), reps in results.items():
                if (m2, s2) == (mu, s):
                    for f, rep in reps.items():
                        series[f"{LABELS[f]} n={n}"] = (rep.alphas, rep.cdf_hat)
            run.write_svg(
                f"gaussian_cdf_mu{mu:g}_sigma{s:g}.svg",
                series,
                title=f"null CDF, mu={mu:g}, sigma={s:g}",
                xlabel="alpha",
                ylabel="P(p <= alpha)",
                diagonal=True,
            )
        run.finish()
    return results
