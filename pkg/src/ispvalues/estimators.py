"""Importance-sampling p-value estimators and their corrected versions.

All weights are carried as natural logs. Given an observed statistic ``t(X)``
with log weight ``log w(X)`` and proposal draws ``Y_1..Y_n`` with statistics
and log weights, this module computes

* ``p_hat``        -- sum_i w(Y_i) 1{t(Y_i) >= t(X)} / n
* ``p_tilde``      -- the self-normalized version of ``p_hat``
* ``p_hat_star``   -- ``(w(X) + sum_i w(Y_i) 1{...}) / (n + 1)``
* ``p_tilde_star`` -- ``(w(X) + sum_i w(Y_i) 1{...}) / (w(X) + sum_j w(Y_j))``

The starred versions are valid p-values for every ``n``; the unstarred ones
are only consistent. ``p_hat`` and ``p_hat_star`` need weights that are an
exact version of dP/dQ, while the tilde versions accept weights known up to a
positive constant.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np
from scipy import special

from .errors import DegenerateWeights, DomainError, MixedWeightScales, NonNormalizedWeights


@dataclass(frozen=True)
class LogWeight:
    """Natural log of an importance weight.

    ``normalized`` is True when ``exp(log_w)`` is an exact version of dP/dQ and
    False when it is only known up to a positive constant.
    """

    log_w: float
    normalized: bool = True

    def __post_init__(self):
        lw = float(self.log_w)
        if math.isnan(lw):
            raise DomainError("log weight is NaN")
        if lw == math.inf:
            raise DomainError("log weight is +inf; the target must be absolutely continuous w.r.t. the proposal")
        object.__setattr__(self, "log_w", lw)

    @property
    def weight(self) -> float:
        return math.exp(self.log_w)


@dataclass(frozen=True)
class WeightedDraw:
    stat: float
    weight: LogWeight

    def __post_init__(self):
        if math.isnan(self.stat):
            raise DomainError("test statistic is NaN")


@dataclass(frozen=True)
class ObservedPoint:
    stat: float
    weight: LogWeight

    def __post_init__(self):
        if math.isnan(self.stat):
            raise DomainError("test statistic is NaN")


class Estimator(str, enum.Enum):
    P_HAT = "p_hat"
    P_TILDE = "p_tilde"
    P_HAT_STAR = "p_hat_star"
    P_TILDE_STAR = "p_tilde_star"
    WALD_UPPER = "wald_upper"


@dataclass(frozen=True)
class PValueReport:
    estimate: float
    kind: Estimator
    n: int
    std_error: float | None = None

    def __post_init__(self):
        if self.kind in (Estimator.P_TILDE, Estimator.P_TILDE_STAR) and not 0.0 <= self.estimate <= 1.0:
            raise DomainError(f"{self.kind.value} estimate {self.estimate} outside [0, 1]")
        if self.kind in (Estimator.P_HAT, Estimator.P_HAT_STAR) and self.estimate < 0:
            raise DomainError(f"{self.kind.value} estimate is negative")
        if self.std_error is not None and self.std_error < 0:
            raise DomainError("negative standard error")

    @property
    def clamped(self) -> float:
        """``min(estimate, 1)``; p_hat-type estimates are stored unclamped."""
        return min(self.estimate, 1.0)

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "clamped": self.clamped,
            "kind": self.kind.value,
            "n": self.n,
            "std_error": self.std_error,
        }


class WeightedSample:
    """Array-backed collection of proposal draws sharing one normalization flag.

    This is the fast path; sequences of :class:`WeightedDraw` are converted to
    it by every estimator.
    """

    __slots__ = ("stats", "log_w", "normalized")

    def __init__(self, stats, log_w, normalized: bool = True):
        stats = np.asarray(stats, dtype=float).ravel()
        log_w = np.asarray(log_w, dtype=float).ravel()
        if stats.shape != log_w.shape:
            raise DomainError("stats and log weights differ in length")
        if np.isnan(stats).any():
            raise DomainError("test statistic is NaN")
        if np.isnan(log_w).any() or (log_w == np.inf).any():
            raise DomainError("log weights must be finite or -inf")
        self.stats = stats
        self.log_w = log_w
        self.normalized = bool(normalized)

    def __len__(self):
        return self.stats.size

    @classmethod
    def from_draws(cls, draws: Sequence[WeightedDraw], normalized: bool | None = None) -> "WeightedSample":
        draws = list(draws)
        flags = {d.weight.normalized for d in draws}
        if len(flags) > 1:
            raise MixedWeightScales("draws mix normalized and unnormalized weights")
        if normalized is None:
            normalized = flags.pop() if flags else True
        return cls([d.stat for d in draws], [d.weight.log_w for d in draws], normalized)


Draws = Union[WeightedSample, Sequence[WeightedDraw]]


def as_sample(draws: Draws) -> WeightedSample:
    if isinstance(draws, WeightedSample):
        return draws
    return WeightedSample.from_draws(draws)


def _shifted_sum(log_w: np.ndarray) -> tuple[float, float]:
    """Return ``(shift, s)`` with ``sum(exp(log_w)) == exp(shift) * s``.

    ``s`` is an fsum (compensated) of max-shifted exponentials.
    """
    if log_w.size == 0:
        return 0.0, 0.0
    shift = float(np.max(log_w))
    if shift == -math.inf:
        return 0.0, 0.0
    return shift, math.fsum(np.exp(log_w - shift))


def _exceed_mask(obs_stat: float, stats: np.ndarray) -> np.ndarray:
    return stats >= obs_stat


def p_hat(obs_stat: float, draws: Draws, empty_value: float | None = None) -> float:
    """Unbiased importance-sampling p-value (may exceed 1).

    With no draws the value is undefined; pass ``empty_value`` (e.g. 0) to opt
    into a convention instead of raising.
    """
    s = as_sample(draws)
    if not s.normalized:
        raise NonNormalizedWeights("p_hat requires normalized importance weights")
    n = len(s)
    if n == 0:
        if empty_value is None:
            raise DomainError("p_hat with n = 0; pass empty_value to choose a convention")
        return float(empty_value)
    lw = s.log_w[_exceed_mask(obs_stat, s.stats)]
    shift, total = _shifted_sum(lw)
    return math.exp(shift) * total / n


def p_tilde(obs_stat: float, draws: Draws) -> float:
    """Self-normalized importance-sampling p-value, with 0/0 taken as 0."""
    s = as_sample(draws)
    if len(s) == 0:
        return 0.0
    shift = float(np.max(s.log_w))
    if shift == -math.inf:
        return 0.0
    w = np.exp(s.log_w - shift)
    num = math.fsum(w[_exceed_mask(obs_stat, s.stats)])
    return min(num / math.fsum(w), 1.0)


def p_hat_star(obs: ObservedPoint, draws: Draws) -> float:
    s = as_sample(draws)
    if not (s.normalized and obs.weight.normalized):
        raise NonNormalizedWeights("p_hat_star requires normalized importance weights")
    lw = np.concatenate(([obs.weight.log_w], s.log_w[_exceed_mask(obs.stat, s.stats)]))
    shift, total = _shifted_sum(lw)
    return math.exp(shift) * total / (len(s) + 1)


def p_tilde_star(obs: ObservedPoint, draws: Draws) -> float:
    s = as_sample(draws)
    if len(s) and s.normalized != obs.weight.normalized:
        raise MixedWeightScales("observed and proposal weights use different normalizations")
    lw = np.concatenate(([obs.weight.log_w], s.log_w))
    shift = float(np.max(lw))
    if shift == -math.inf:
        return 0.0
    w = np.exp(lw - shift)
    mask = np.concatenate(([True], _exceed_mask(obs.stat, s.stats)))
    # p_tilde_star >= p_tilde holds exactly; the max only absorbs rounding
    return max(min(math.fsum(w[mask]) / math.fsum(w), 1.0), p_tilde(obs.stat, s))


def p_hat_std_error(obs_stat: float, draws: Draws) -> float:
    """Standard error of ``p_hat``: sample sd of the summands over sqrt(n)."""
    s = as_sample(draws)
    if not s.normalized:
        raise NonNormalizedWeights("p_hat requires normalized importance weights")
    n = len(s)
    if n < 2:
        return math.nan
    terms = np.where(_exceed_mask(obs_stat, s.stats), np.exp(s.log_w), 0.0)
    return float(np.std(terms, ddof=1) / math.sqrt(n))


def p_tilde_std_error(obs_stat: float, draws: Draws) -> float:
    """Delta-method standard error of the ratio estimator ``p_tilde``."""
    s = as_sample(draws)
    n = len(s)
    if n < 2:
        return math.nan
    shift = float(np.max(s.log_w))
    if shift == -math.inf:
        return math.nan
    w = np.exp(s.log_w - shift)
    mean_w = w.mean()
    p = p_tilde(obs_stat, s)
    resid = w * (_exceed_mask(obs_stat, s.stats) - p)
    return float(math.sqrt(np.sum(resid**2) / (n * (n - 1))) / mean_w)


def two_sided_combine(p_plus: float, p_minus: float) -> float:
    if not (0.0 <= p_plus <= 1.0 and 0.0 <= p_minus <= 1.0):
        raise DomainError("one-sided p-values must lie in [0, 1]")
    return min(1.0, 2.0 * min(p_plus, p_minus))


def normal_quantile(level):
    return special.ndtri(level)


def normal_sf(x):
    """Upper tail ``1 - Phi(x)`` computed without cancellation."""
    return special.ndtr(-np.asarray(x, dtype=float))


def wald_upper_limit(p_hat_value: float, se: float, level: float) -> float:
    """Upper Wald confidence limit ``p_hat + z_level * se``."""
    if not 0.0 < level < 1.0:
        raise DomainError("level must lie in (0, 1)")
    if se < 0:
        raise DomainError("standard error must be nonnegative")
    if se == 0:
        return float(p_hat_value)
    return float(p_hat_value + normal_quantile(level) * se)


def ess_diagnostic(draws: Draws) -> float:
    """Kong's effective sample size ``n / (1 + cv^2)`` of the importance weights."""
    s = as_sample(draws)
    n = len(s)
    if n < 2:
        raise DomainError("effective sample size needs at least two draws")
    shift = float(np.max(s.log_w))
    if shift == -math.inf:
        raise DegenerateWeights("all importance weights are zero")
    w = np.exp(s.log_w - shift)
    cv2 = np.var(w, ddof=1) / np.mean(w) ** 2
    return float(n / (1.0 + cv2))


def squared_cv(draws: Draws) -> float:
    s = as_sample(draws)
    w = np.exp(s.log_w - np.max(s.log_w))
    return float(np.var(w, ddof=1) / np.mean(w) ** 2)


def report(kind: Estimator | str, obs: ObservedPoint, draws: Draws, level: float | None = None) -> PValueReport:
    """Compute one estimator and wrap it in a :class:`PValueReport`.

    Standard errors are attached to the uncorrected estimators only; the
    corrected values are reported bare.
    """
    kind = Estimator(kind)
    s = as_sample(draws)
    n = len(s)
    if kind is Estimator.P_HAT:
        return PValueReport(p_hat(obs.stat, s, empty_value=0.0), kind, n, p_hat_std_error(obs.stat, s) if n > 1 else None)
    if kind is Estimator.P_TILDE:
        return PValueReport(p_tilde(obs.stat, s), kind, n, p_tilde_std_error(obs.stat, s) if n > 1 else None)
    if kind is Estimator.P_HAT_STAR:
        return PValueReport(p_hat_star(obs, s), kind, n)
    if kind is Estimator.P_TILDE_STAR:
        return PValueReport(p_tilde_star(obs, s), kind, n)
    if level is None:
        raise DomainError("wald_upper needs a confidence level")
    est = p_hat(obs.stat, s)
    se = p_hat_std_error(obs.stat, s)
    return PValueReport(wald_upper_limit(est, se, level), kind, n, se)


class BatchEstimates(NamedTuple):
    p_hat: np.ndarray
    p_tilde: np.ndarray
    p_hat_star: np.ndarray
    p_tilde_star: np.ndarray


def batch_estimates(obs_stat, obs_log_w, stats, log_w) -> BatchEstimates:
    """All four estimators for many independent replications at once.

    ``obs_stat`` and ``obs_log_w`` have shape ``(R,)``; ``stats`` and ``log_w``
    have shape ``(R, n)``. Rows are independent experiments. ``p_hat`` values
    are meaningful only for normalized weights; the caller decides which
    columns to use. Returns raw (unclamped) values.
    """
    obs_stat = np.asarray(obs_stat, dtype=float)
    obs_log_w = np.asarray(obs_log_w, dtype=float)
    stats = np.asarray(stats, dtype=float)
    log_w = np.asarray(log_w, dtype=float)
    n = stats.shape[1]
    exceed = stats >= obs_stat[:, None]
    shift = np.maximum(obs_log_w, np.max(log_w, axis=1, initial=-np.inf))
    shift = np.where(np.isfinite(shift), shift, 0.0)
    w = np.exp(log_w - shift[:, None])
    w_obs = np.exp(obs_log_w - shift)
    hit = np.sum(np.where(exceed, w, 0.0), axis=1)
    tot = np.sum(w, axis=1)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        ph = np.exp(np.log(hit) + shift) / n if n else np.zeros_like(obs_stat)
        pt = np.where(tot > 0, hit / np.where(tot > 0, tot, 1.0), 0.0)
        phs = np.exp(np.log(w_obs + hit) + shift) / (n + 1)
        den = w_obs + tot
        pts = np.where(den > 0, (w_obs + hit) / np.where(den > 0, den, 1.0), 0.0)
    pt = np.minimum(pt, 1.0)
    return BatchEstimates(ph, pt, phs, np.maximum(np.minimum(pts, 1.0), pt))


def batch_p_hat_std_error(obs_stat, stats, log_w) -> np.ndarray:
    stats = np.asarray(stats, dtype=float)
    terms = np.where(stats >= np.asarray(obs_stat, dtype=float)[:, None], np.exp(log_w), 0.0)
    n = stats.shape[1]
    return np.std(terms, axis=1, ddof=1) / math.sqrt(n)
