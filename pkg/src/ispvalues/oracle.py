"""Ground-truth computations used to check the estimators and samplers.

Everything here is either exact (enumeration, dynamic programming, closed
forms) or a plain Monte Carlo tally of ``P(p <= alpha)`` under the null.
"""

from __future__ import annotations

import csv
import enum
import itertools
import json
import math
from fractions import Fraction
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Protocol, Sequence

import numpy as np
from scipy import special

from .errors import DomainError, ShapeError, TooLarge
from .estimators import batch_estimates
from .parallel import chunked_map
from .proposals.gaussian import GaussianPair
from .proposals.permutation import PermutationFiber
from .proposals.tables import MarginFiber, gale_ryser_feasible
from .statistics import StatisticKind, evaluate_statistic

PERMUTATION_LIMIT = 10
ENUMERATION_LIMIT = 10**6


# ---------------------------------------------------------------------------
# Algebraic inequality behind the validity guarantee


def lemma1_check(t, w, alpha) -> tuple[float, bool]:
    """Evaluate ``sum_k w_k 1{sum_i w_i 1{t_i >= t_k} <= alpha}`` and test ``<= alpha``.

    All sums and comparisons use exact rational arithmetic on the given
    values (floats convert exactly; :class:`fractions.Fraction` inputs are
    kept as is), so the verdict has no rounding error. Returns ``(lhs, holds)``
    with ``lhs`` rounded to float.
    """
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or len(w) != t.size:
        raise ShapeError("t and w must be 1-d and of equal length")
    if np.isnan(t).any():
        raise DomainError("statistics must not be NaN")
    wq = [Fraction(x) if isinstance(x, Fraction) else _exact(x) for x in w]
    aq = Fraction(alpha) if isinstance(alpha, Fraction) else _exact(alpha)
    if any(x < 0 for x in wq) or aq < 0:
        raise DomainError("weights and alpha must be nonnegative")
    order = np.argsort(-t, kind="stable")
    ts = t[order]
    # tail[k] = sum of w_i over t_i >= t_k, constant on tie groups
    lhs = Fraction(0)
    running = Fraction(0)
    start = 0
    n = t.size
    while start < n:
        stop = start
        while stop < n and ts[stop] == ts[start]:
            stop += 1
        group = [wq[i] for i in order[start:stop]]
        running += sum(group, Fraction(0))
        if running <= aq:
            lhs += sum(group, Fraction(0))
        start = stop
    return float(lhs), lhs <= aq


def _exact(x) -> Fraction:
    x = float(x)
    if not math.isfinite(x):
        raise DomainError("weights and alpha must be finite")
    return Fraction(x)


def random_lemma1_instance(rng: np.random.Generator, max_n: int = 12):
    """A random ``(t, w, alpha)`` with ties, zero weights and infinite statistics."""
    n = int(rng.integers(1, max_n + 1))
    pool = np.array([-np.inf, np.inf, 0.0, 1.0, 2.0])
    t = np.where(rng.random(n) < 0.3, rng.choice(pool, n), rng.integers(-3, 4, n).astype(float))
    w = rng.exponential(1.0, n) / n
    w[rng.random(n) < 0.25] = 0.0
    if rng.random() < 0.2:
        w[:] = 1.0 / n
    alpha = float(rng.choice([rng.random(), rng.random() * 2, 0.0, float(w[: max(1, n // 2)].sum())]))
    return t, w, alpha


# ---------------------------------------------------------------------------
# Permutation tests


def enumerate_labelings(m: int, r: int) -> np.ndarray:
    """All ``C(m, r)`` boolean labelings with ``r`` ones, shape ``(C(m, r), m)``."""
    combos = list(itertools.combinations(range(m), r))
    out = np.zeros((len(combos), m), dtype=bool)
    for i, c in enumerate(combos):
        out[i, list(c)] = True
    return out


def _permutation_statistic(statistic, values, labels):
    if callable(statistic):
        return np.asarray(statistic(values, labels), dtype=float)
    return np.asarray(evaluate_statistic(statistic, (values, labels)), dtype=float)


def exact_permutation_pvalue(fiber: PermutationFiber, labeling, statistic=StatisticKind.MEDIAN_DIFF) -> float:
    """Fraction of all labelings whose statistic is ``>=`` the observed one.

    Each distinct labeling corresponds to the same number ``r! (m - r)!`` of
    permutations, so averaging over labelings equals averaging over all
    ``m!`` permutations. ``statistic`` is a :class:`StatisticKind` applied to
    ``(values, labels)`` or a callable with that signature.
    """
    if fiber.m > PERMUTATION_LIMIT:
        raise TooLarge(f"exact enumeration supports m <= {PERMUTATION_LIMIT}")
    labeling = np.asarray(labeling).astype(bool)
    if labeling.shape != (fiber.m,) or labeling.sum() != fiber.r:
        raise DomainError("labeling does not belong to the fiber")
    all_labels = enumerate_labelings(fiber.m, fiber.r)
    stats = _permutation_statistic(statistic, fiber.values, all_labels)
    obs = float(_permutation_statistic(statistic, fiber.values, labeling[None])[0])
    return float(np.mean(stats >= obs))


# ---------------------------------------------------------------------------
# Binary matrices with fixed margins


def count_margin_fiber(row_sums, col_sums) -> int:
    """Number of 0/1 matrices with the given margins.

    Rows with equal residual sums are interchangeable, so the state is the
    multiset of residual row sums after each column. Exact integer arithmetic.
    """
    rows = tuple(int(r) for r in row_sums)
    cols = tuple(int(c) for c in col_sums)
    if sum(rows) != sum(cols) or min(rows + cols, default=0) < 0:
        return 0
    # The count is unchanged by transposing and by reordering columns. Stepping
    # through the shorter side in decreasing order keeps the state space small.
    if len(cols) > len(rows):
        rows, cols = cols, rows
    cols = tuple(sorted(cols, reverse=True))
    top = max(rows, default=0)

    @lru_cache(maxsize=None)
    def count(j: int, hist: tuple[int, ...]) -> int:
        if j == len(cols):
            return int(all(h == 0 for h in hist[1:]))
        out = 0
        c = cols[j]
        levels = [r for r in range(1, top + 1) if hist[r]]
        for take in _compositions(c, [hist[r] for r in levels]):
            ways = 1
            new = list(hist)
            for r, k in zip(levels, take):
                if k:
                    ways *= math.comb(hist[r], k)
                    new[r] -= k
                    new[r - 1] += k
            out += ways * count(j + 1, tuple(new))
        return out

    hist = [0] * (top + 1)
    for r in rows:
        hist[r] += 1
    return count(0, tuple(hist))


def _compositions(total: int, caps: Sequence[int]):
    """All tuples ``k`` with ``0 <= k_i <= caps_i`` and ``sum(k) == total``."""
    if not caps:
        if total == 0:
            yield ()
        return
    rest = sum(caps[1:])
    for k in range(max(0, total - rest), min(caps[0], total) + 1):
        for tail in _compositions(total - k, caps[1:]):
            yield (k,) + tail


def enumerate_margin_fiber(fiber: MarginFiber, limit: int = ENUMERATION_LIMIT) -> np.ndarray:
    """Every matrix of the fiber exactly once, shape ``(K, m, n)``.

    The fiber is counted first and refused with :class:`TooLarge` when it
    holds more than ``limit`` matrices.
    """
    size = count_margin_fiber(fiber.row_sums, fiber.col_sums)
    if size > limit:
        raise TooLarge(f"fiber holds {size} matrices, limit is {limit}")
    m, n = fiber.shape
    cols = [int(c) for c in fiber.col_sums]
    out = np.zeros((size, m, n), dtype=np.int8)
    current = np.zeros((m, n), dtype=np.int8)
    found = 0

    def fill(j: int, resid: np.ndarray):
        nonlocal found
        if j == n:
            out[found] = current
            found += 1
            return
        for rows in itertools.combinations(np.flatnonzero(resid > 0).tolist(), cols[j]):
            nxt = resid.copy()
            nxt[list(rows)] -= 1
            if not gale_ryser_feasible(nxt, cols[j + 1 :]):
                continue
            current[:, j] = 0
            current[list(rows), j] = 1
            fill(j + 1, nxt)
        current[:, j] = 0

    fill(0, np.asarray(fiber.row_sums, dtype=np.int64).copy())
    assert found == size
    return out


def sequential_path_law(row_sums, col_sums, covariates=None, theta: float = 0.0):
    """Law of the column-wise conditional Poisson sampler by brute force over all paths.

    Each column's subset probability is the product of row weights divided by
    the sum of such products over every admissible subset, written out
    directly instead of through the elementary-symmetric recursion. Returns
    ``({matrix.tobytes(): probability}, dead-end probability)``.
    """
    rows = [int(r) for r in row_sums]
    cols = [int(c) for c in col_sums]
    m, n = len(rows), len(cols)
    law: dict[bytes, float] = {}
    dead = [0.0]

    def weight(i, j, resid, k):
        w = resid[i] / (k - resid[i])
        return w * math.exp(theta * covariates[i][j]) if covariates is not None else w

    def visit(j, resid, mat, prob):
        if j == n:
            key = mat.tobytes()
            law[key] = law.get(key, 0.0) + prob
            return
        k = n - j
        forced = [i for i in range(m) if resid[i] == k]
        free = [i for i in range(m) if 0 < resid[i] < k]
        need = cols[j] - len(forced)
        if need < 0 or need > len(free):
            dead[0] += prob
            return
        w = {i: weight(i, j, resid, k) for i in free}
        subsets = list(itertools.combinations(free, need))
        total = math.fsum(math.prod(w[i] for i in sub) for sub in subsets)
        for sub in subsets:
            p = math.prod(w[i] for i in sub) / total
            chosen = set(forced) | set(sub)
            nxt = mat.copy()
            nxt[list(chosen), j] = 1
            new = [resid[i] - (i in chosen) for i in range(m)]
            if gale_ryser_feasible(new, cols[j + 1 :]):
                visit(j + 1, new, nxt, prob * p)
            else:
                dead[0] += prob * p

    visit(0, rows, np.zeros((m, n), dtype=np.int8), 1.0)
    return law, dead[0]


def exact_tilted_table_pvalue(fiber: MarginFiber, observed, statistic: Callable, log_target=None) -> float:
    """Exact ``P(t(Y) >= t(observed))`` over an enumerable fiber.

    ``log_target`` maps a batch of matrices to unnormalized log-masses; the
    default is the uniform law.
    """
    mats = enumerate_margin_fiber(fiber)
    stats = np.asarray(statistic(mats), dtype=float)
    obs = float(statistic(np.asarray(observed)[None])[0])
    if log_target is None:
        return float(np.mean(stats >= obs))
    lp = np.asarray(log_target(mats), dtype=float)
    p = np.exp(lp - special.logsumexp(lp))
    return float(math.fsum(p[stats >= obs]))


def exact_structured_pvalue(t_obs: float, n_cols: int = 102, k: int = 51) -> float:
    """Uniform-law ``P(t >= t_obs)`` for the column-index sum of the first row.

    Under the uniform law on the structured fiber the first row is a uniform
    ``k``-subset of ``{1..n_cols}``; its index sum is counted exactly by a
    subset-sum recursion over (subset size, sum).
    """
    max_sum = sum(range(n_cols - k + 1, n_cols + 1))
    ways = [[0] * (max_sum + 1) for _ in range(k + 1)]
    ways[0][0] = 1
    for v in range(1, n_cols + 1):
        for size in range(min(v, k), 0, -1):
            prev, cur = ways[size - 1], ways[size]
            for s in range(max_sum, v - 1, -1):
                if prev[s - v]:
                    cur[s] += prev[s - v]
    threshold = math.ceil(t_obs)
    hits = sum(ways[k][max(threshold, 0) :])
    return hits / math.comb(n_cols, k)


def gaussian_true_pvalue(x):
    """``1 - Phi(x)`` computed as ``Phi(-x)`` (no cancellation in the upper tail)."""
    out = special.ndtr(-np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Joint (data + Monte Carlo) validity simulation


class Verdict(str, enum.Enum):
    VALID = "valid"
    VIOLATION = "violation"


@dataclass(frozen=True)
class ValidityReport:
    alphas: np.ndarray
    cdf_hat: np.ndarray
    se: np.ndarray
    replications: int
    k: float = 3.0
    label: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def verdicts(self) -> list[Verdict]:
        return [
            Verdict.VIOLATION if c > a + self.k * s else Verdict.VALID
            for a, c, s in zip(self.alphas, self.cdf_hat, self.se)
        ]

    @property
    def valid(self) -> bool:
        return all(v is Verdict.VALID for v in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "replications": self.replications,
            "k": self.k,
            "alphas": [float(a) for a in self.alphas],
            "cdf_hat": [float(c) for c in self.cdf_hat],
            "se": [float(s) for s in self.se],
            "verdicts": [v.value for v in self.verdicts],
            **self.extra,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["alpha", "cdf_hat", "se", "verdict"])
            for a, c, s, v in zip(self.alphas, self.cdf_hat, self.se, self.verdicts):
                w.writerow([repr(float(a)), repr(float(c)), repr(float(s)), v.value])


def binomial_se(p_hat, replications: int):
    """Binomial standard error ``sqrt(p (1 - p) / R)`` of a tail-frequency estimate."""
    p = np.asarray(p_hat, dtype=float)
    return np.sqrt(p * (1 - p) / replications)


class Scenario(Protocol):
    """Vectorized null experiment: ``run(rng, size)`` returns ``size`` p-values."""

    def run(self, rng: np.random.Generator, size: int) -> np.ndarray: ...


ESTIMATOR_FIELDS = ("p_hat", "p_tilde", "p_hat_star", "p_tilde_star")


@dataclass(frozen=True)
class GaussianScenario:
    """``X ~ N(0, 1)``, draws from ``N(mu, sigma)``, statistic ``t(x) = x``."""

    mu: float
    sigma: float
    n: int
    estimator: str = "p_hat_star"

    def all_estimates(self, rng: np.random.Generator, size: int):
        pair = GaussianPair(self.mu, self.sigma)
        x = rng.standard_normal(size)
        y = self.mu + self.sigma * rng.standard_normal((size, self.n))
        return x, batch_estimates(x, pair.log_weight(x), y, pair.log_weight(y))

    def run(self, rng, size):
        return getattr(self.all_estimates(rng, size)[1], self.estimator)


@dataclass(frozen=True)
class DirectSamplingScenario:
    """Target sampled directly (``Q = P``); all weights equal one.

    ``sampler(rng, size)`` returns ``size`` statistic values from the null.
    """

    sampler: Callable[[np.random.Generator, int], np.ndarray]
    n: int
    estimator: str = "p_hat_star"

    def run(self, rng, size):
        x = np.asarray(self.sampler(rng, size), dtype=float)
        y = np.asarray(self.sampler(rng, size * self.n), dtype=float).reshape(size, self.n)
        est = batch_estimates(x, np.zeros(size), y, np.zeros((size, self.n)))
        return getattr(est, self.estimator)


def validity_monte_carlo(
    scenario: Scenario,
    replications: int,
    alpha_grid: Sequence[float],
    seed: int = 0,
    threads: int = 1,
    chunk: int = 10_000,
    k: float = 3.0,
    label: str = "",
    tag: str = "validity",
) -> ValidityReport:
    """Tally ``P(p <= alpha)`` over independent null replications."""
    alphas = np.asarray(alpha_grid, dtype=float)

    def job(rng, start, count):
        p = np.asarray(scenario.run(rng, count), dtype=float)
        return (p[:, None] <= alphas[None, :]).sum(axis=0)

    hits = np.sum(chunked_map(job, replications, chunk, seed, tag, threads), axis=0)
    cdf = hits / replications
    return ValidityReport(alphas, cdf, binomial_se(cdf, replications), replications, k, label)
