"""Multiple-testing control and confidence sets by test inversion."""

from __future__ import annotations

import csv
import enum
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .estimators import batch_estimates, two_sided_combine


@dataclass(frozen=True)
class MultiTestOutcome:
    pvalues: np.ndarray
    alpha: float
    n_tests: int
    rejected: tuple[int, ...]

    @property
    def threshold(self) -> float:
        return self.alpha / self.n_tests


def bonferroni(pvalues, alpha: float, n_tests: int | None = None) -> MultiTestOutcome:
    """Reject ``i`` iff ``p_i <= alpha / n_tests``.

    ``n_tests`` defaults to ``len(pvalues)`` and may be larger when only part
    of the family is passed in.
    """
    p = np.asarray(pvalues, dtype=float).ravel()
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    n_tests = p.size if n_tests is None else int(n_tests)
    if n_tests < max(p.size, 1):
        raise DomainError("n_tests must be at least the number of p-values")
    rejected = tuple(int(i) for i in np.flatnonzero(p <= alpha / n_tests))
    return MultiTestOutcome(p, alpha, n_tests, rejected)


@dataclass(frozen=True)
class ConfidenceSet:
    grid: np.ndarray
    pvalues: np.ndarray
    alpha: float
    retained: np.ndarray

    @property
    def empty(self) -> bool:
        return not self.retained.any()

    @property
    def hull(self) -> tuple[float, float] | None:
        if self.empty:
            return None
        kept = self.grid[self.retained]
        return float(kept.min()), float(kept.max())

    @property
    def hull_length(self) -> float:
        h = self.hull
        return 0.0 if h is None else h[1] - h[0]

    @property
    def contiguous(self) -> bool:
        """False when the retained grid points do not form one run."""
        idx = np.flatnonzero(self.retained)
        return idx.size == 0 or bool(idx[-1] - idx[0] + 1 == idx.size)

    def covers(self, theta: float, atol: float = 1e-9) -> bool:
        hit = np.flatnonzero(np.isclose(self.grid, theta, rtol=0, atol=atol))
        if hit.size == 0:
            raise DomainError(f"{theta} is not a grid point")
        return bool(self.retained[hit[0]])

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "grid": self.grid.tolist(),
            "pvalues": self.pvalues.tolist(),
            "retained": self.retained.tolist(),
            "hull": list(self.hull) if self.hull else None,
            "contiguous": self.contiguous,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta", "pvalue", "retained"])
            for th, p, r in zip(self.grid, self.pvalues, self.retained):
                w.writerow([repr(float(th)), repr(float(p)), int(r)])


def invert_confidence_set(
    grid: Sequence[float], pvalue_at: Callable[[float], float], alpha: float, threads: int = 1
) -> ConfidenceSet:
    """``{theta in grid : pvalue_at(theta) > alpha}``.

    ``pvalue_at`` should be deterministic given a stored Monte Carlo sample,
    so every grid point is tested against the same draws.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size > 1 and (np.diff(grid) <= 0).any():
        raise DomainError("grid must be strictly increasing")
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            pv = np.array(list(ex.map(pvalue_at, grid)), dtype=float)
    else:
        pv = np.array([pvalue_at(th) for th in grid], dtype=float)
    return ConfidenceSet(grid, pv, float(alpha), pv > alpha)


def confidence_set_from_pvalues(grid, pvalues, alpha: float) -> ConfidenceSet:
    grid = np.asarray(grid, dtype=float)
    pv = np.asarray(pvalues, dtype=float)
    return ConfidenceSet(grid, pv, float(alpha), pv > alpha)


class PValueKind(str, enum.Enum):
    CORRECTED = "corrected"
    UNCORRECTED = "uncorrected"


@dataclass(frozen=True)
class RaschSample:
    """Observed matrix summary plus one shared proposal sample.

    Holds the sufficient statistic and the mixture log-probability of the
    observation and of each draw. Dead-end draws carry ``log_q = +inf`` so
    their weight ``theta * t - log_q`` is zero for every ``theta``.
    """

    obs_stat: float
    obs_log_q: float
    stats: np.ndarray
    log_q: np.ndarray

    @classmethod
    def draw(cls, mix, observed, rng: np.random.Generator, n: int) -> "RaschSample":
        mats, lq = mix.sample(rng, n)
        inside = mix.fiber.contains(mats)
        stats = mix.statistic(mats)
        return cls(
            float(mix.statistic(observed)),
            float(mix.logprob(np.asarray(observed)[None])[0]),
            np.asarray(stats, dtype=float),
            np.where(inside, lq, np.inf),
        )

    @property
    def n(self) -> int:
        return self.stats.size

    def head(self, n: int) -> "RaschSample":
        """The same observation with only the first ``n`` draws."""
        return RaschSample(self.obs_stat, self.obs_log_q, self.stats[:n], self.log_q[:n])

    def log_weights(self, theta):
        """Unnormalized log weights at ``theta`` (scalar or array of thetas)."""
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        obs = th * self.obs_stat - self.obs_log_q
        with np.errstate(invalid="ignore"):
            draws = th[:, None] * self.stats[None, :] - self.log_q[None, :]
        draws = np.where(np.isinf(self.log_q)[None, :] & (self.log_q[None, :] > 0), -np.inf, draws)
        return obs, draws

    def one_sided(self, grid, sign: int = 1):
        """``(p_tilde, p_tilde_star)`` arrays over ``grid`` for statistic ``sign * t``."""
        obs_lw, lw = self.log_weights(grid)
        g = obs_lw.size
        est = batch_estimates(
            np.full(g, sign * self.obs_stat), obs_lw, np.broadcast_to(sign * self.stats, (g, self.n)), lw
        )
        return est.p_tilde, est.p_tilde_star

    def two_sided(self, grid, kind: PValueKind | str = PValueKind.CORRECTED) -> np.ndarray:
        kind = PValueKind(kind)
        pt_plus, pts_plus = self.one_sided(grid, +1)
        pt_minus, pts_minus = self.one_sided(grid, -1)
        if kind is PValueKind.CORRECTED:
            plus, minus = pts_plus, pts_minus
        else:
            plus, minus = pt_plus, pt_minus
        return np.array([two_sided_combine(a, b) for a, b in zip(plus, minus)])

    def confidence_set(self, grid, alpha: float, kind: PValueKind | str = PValueKind.CORRECTED) -> ConfidenceSet:
        return confidence_set_from_pvalues(grid, self.two_sided(grid, kind), alpha)


def two_sided_rasch_pvalue(theta: float, sample: RaschSample, kind: PValueKind | str = PValueKind.CORRECTED) -> float:
    return float(sample.two_sided([theta], kind)[0])
