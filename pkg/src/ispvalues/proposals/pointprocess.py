"""Lag-tilted proposals for pairs of discretized spike trains.

Time is split into windows of ``delta`` bins. The null law of a pair of trains
is uniform over all placements that keep every window's event count. Trains
are stored as 0/1 arrays over the ``length`` time bins.

The proposal draws the first train uniformly, picks a lag ``d`` uniformly from
the configured lags, and then draws the second train so that, in each
window, the number ``r`` of its events that coincide with the first train
shifted by ``d`` has probability proportional to
``C(m_a, r) C(delta - m_a, k_a - r) exp(theta_d r)``, where ``m_a`` is the number
of shifted events in the window and ``k_a`` its event count. Placement
within the window is then uniform.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..errors import DomainError, ShapeError
from .permutation import log_binom


class TiltSign(str, enum.Enum):
    PLUS = "plus"
    MINUS = "minus"


@dataclass(frozen=True)
class TiltedPointProcessConfig:
    lags: tuple[int, ...] = (0, 1, 2, 3, 4)
    thetas: tuple[float, ...] = (0.0, 0.5, 0.5, 0.5, 0.5)
    sign: TiltSign = TiltSign.PLUS

    def __post_init__(self):
        if len(self.lags) != len(self.thetas) or not self.lags:
            raise DomainError("lags and thetas must be nonempty and the same length")

    @classmethod
    def for_sign(cls, sign: TiltSign | str, strength: float = 0.5) -> "TiltedPointProcessConfig":
        """Defaults: no tilt at lag 0, ``+strength`` (or ``-strength``) at lags 1..4."""
        sign = TiltSign(sign)
        s = strength if sign is TiltSign.PLUS else -strength
        return cls((0, 1, 2, 3, 4), (0.0, s, s, s, s), sign)


def window_counts(trains, delta: int) -> np.ndarray:
    t = np.asarray(trains)
    length = t.shape[-1]
    return t.reshape(t.shape[:-1] + (length // delta, delta)).sum(axis=-1, dtype=np.int64)


@dataclass(frozen=True)
class BinnedPairFiber:
    delta: int
    length: int
    counts_i: np.ndarray
    counts_j: np.ndarray

    def __init__(self, delta: int, length: int, counts_i, counts_j):
        if delta <= 0 or length <= 0 or length % delta:
            raise DomainError("length must be a positive multiple of delta")
        ci = np.asarray(counts_i, dtype=np.int64)
        cj = np.asarray(counts_j, dtype=np.int64)
        w = length // delta
        if ci.shape != (w,) or cj.shape != (w,):
            raise ShapeError(f"need {w} window counts per train")
        for c in (ci, cj):
            if (c < 0).any() or (c > delta).any():
                raise DomainError("window counts must lie in [0, delta]")
        object.__setattr__(self, "delta", int(delta))
        object.__setattr__(self, "length", int(length))
        object.__setattr__(self, "counts_i", ci)
        object.__setattr__(self, "counts_j", cj)

    @property
    def n_windows(self) -> int:
        return self.length // self.delta

    @classmethod
    def from_events(cls, times_i, times_j, delta: int, length: int) -> "BinnedPairFiber":
        out = []
        for times in (times_i, times_j):
            times = np.asarray(times, dtype=np.int64)
            if times.size and ((np.diff(times) <= 0).any() or times[0] < 0 or times[-1] >= length):
                raise DomainError("event times must be strictly increasing integers in [0, length)")
            out.append(np.bincount(times // delta, minlength=length // delta))
        return cls(delta, length, out[0], out[1])

    @classmethod
    def from_trains(cls, train_i, train_j, delta: int) -> "BinnedPairFiber":
        train_i = np.asarray(train_i)
        return cls(delta, train_i.size, window_counts(train_i, delta), window_counts(train_j, delta))

    def log_size(self, which: str = "i") -> float:
        counts = self.counts_i if which == "i" else self.counts_j
        return float(np.sum(log_binom(self.delta, counts)))

    def contains(self, trains, which: str = "i") -> np.ndarray:
        counts = self.counts_i if which == "i" else self.counts_j
        t = np.asarray(trains)
        return ((t == 0) | (t == 1)).all(axis=-1) & (window_counts(t, self.delta) == counts).all(axis=-1)


def uniform_trains(counts, delta: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` uniform draws of a train with the given per-window counts.

    ``counts`` has shape ``(W,)`` (shared) or ``(size, W)`` (one row per draw).
    """
    counts = np.broadcast_to(np.asarray(counts), (size, np.shape(counts)[-1]))
    w = counts.shape[-1]
    keys = rng.random((size, w, delta))
    return smallest_k(keys, counts).reshape(size, w * delta).astype(np.int8)


def smallest_k(keys, k) -> np.ndarray:
    """Mask of the ``k`` smallest entries along the last axis (``k`` per row).

    With i.i.d. uniform keys this is a uniformly random ``k``-subset; entries
    set to a key above 1 are never chosen as long as ``k`` does not exceed
    the number of keys below 1.
    """
    k = np.asarray(k)
    srt = np.sort(keys, axis=-1)
    kth = np.take_along_axis(srt, np.clip(k - 1, 0, keys.shape[-1] - 1)[..., None], axis=-1)
    return (keys <= kth) & (k[..., None] > 0)


def shift_train(train, d: int) -> np.ndarray:
    """Train of ``u + d``: events moved by ``d`` bins; events leaving the range are dropped."""
    t = np.asarray(train)
    out = np.zeros_like(t)
    if d >= 0:
        out[..., d:] = t[..., : t.shape[-1] - d]
    else:
        out[..., :d] = t[..., -d:]
    return out


class TiltedPointProcess:
    """Mixture over lags of the lag-``d`` tilted law, conditional on the first train."""

    def __init__(self, fiber: BinnedPairFiber, cfg: TiltedPointProcessConfig | None = None):
        self.fiber = fiber
        self.cfg = cfg or TiltedPointProcessConfig()
        D = fiber.delta
        m = np.arange(D + 1)[:, None, None]
        k = np.arange(D + 1)[None, :, None]
        r = np.arange(D + 1)[None, None, :]
        base = log_binom(m, r) + log_binom(D - m, k - r)
        self._log_z = []
        self._r_cdf = []
        for theta in self.cfg.thetas:
            terms = base + theta * r
            log_z = logsumexp(terms, axis=-1)
            self._log_z.append(log_z)
            with np.errstate(invalid="ignore"):
                p = np.exp(terms - log_z[..., None])
            self._r_cdf.append(np.cumsum(np.nan_to_num(p), axis=-1))
        self._log_z = np.stack(self._log_z)  # (n_lags, D+1, D+1)
        self._r_cdf = np.stack(self._r_cdf)  # (n_lags, D+1, D+1, D+1)
        self._log_n_lags = np.log(len(self.cfg.lags))

    def _counts_j(self, counts_j):
        return self.fiber.counts_j if counts_j is None else np.asarray(counts_j)

    def log_rho(self, s, u, lag_index: int, counts_j=None) -> np.ndarray:
        """log of the lag-``d`` tilted probability of train ``s`` given train ``u``.

        ``counts_j`` overrides the fiber's window counts for the second train,
        with shape ``(W,)`` or one row per batch entry; this lets one proposal
        object serve many fibers that share ``delta`` and ``length``.
        """
        k_a = self._counts_j(counts_j)
        s = np.asarray(s)
        return np.where(self._inside(s, k_a), self._log_rho_raw(s, u, lag_index, k_a), -np.inf)

    def _inside(self, s, k_a):
        return ((s == 0) | (s == 1)).all(axis=-1) & (window_counts(s, self.fiber.delta) == k_a).all(axis=-1)

    def _log_rho_raw(self, s, u, lag_index, k_a):
        ud = shift_train(u, self.cfg.lags[lag_index])
        matches = np.sum(s * ud, axis=-1, dtype=np.int32)
        m_a = window_counts(ud, self.fiber.delta)
        log_z = self._log_z[lag_index][m_a, k_a].sum(axis=-1)
        return self.cfg.thetas[lag_index] * matches - log_z

    def logprob(self, s, u, counts_j=None) -> np.ndarray:
        """log of ``(1/|lags|) sum_d rho(s, u, d, theta_d)``."""
        k_a = self._counts_j(counts_j)
        s = np.asarray(s)
        lr = np.stack([self._log_rho_raw(s, u, i, k_a) for i in range(len(self.cfg.lags))])
        return np.where(self._inside(s, k_a), logsumexp(lr, axis=0) - self._log_n_lags, -np.inf)

    def sample(self, u, rng: np.random.Generator, counts_j=None):
        """Draw the second train for each first train in ``u`` (shape ``(batch, length)``)."""
        u = np.atleast_2d(np.asarray(u, dtype=np.int8))
        size = u.shape[0]
        D = self.fiber.delta
        W = self.fiber.n_windows
        lag_idx = rng.integers(len(self.cfg.lags), size=size)
        ud = np.empty_like(u)
        for i, d in enumerate(self.cfg.lags):
            sel = lag_idx == i
            if sel.any():
                ud[sel] = shift_train(u[sel], d)
        match = ud.reshape(size, W, D).astype(bool)
        m_a = match.sum(axis=-1)
        k_a = np.broadcast_to(self._counts_j(counts_j), (size, W))
        cdf = self._r_cdf[lag_idx[:, None], m_a, k_a]  # (size, W, D+1)
        r = np.sum(cdf <= rng.random((size, W))[..., None] * cdf[..., -1:], axis=-1)
        keys = rng.random((size, W, D))
        chosen = smallest_k(np.where(match, keys, 2.0), r) | smallest_k(np.where(match, 2.0, keys), k_a - r)
        s = chosen.reshape(size, W * D).astype(np.int8)
        return s, self.logprob(s, u, counts_j)

    def sample_pair(self, rng: np.random.Generator, size: int):
        """Joint proposal draw ``(u, s, log_q)``: ``u`` uniform, ``s`` from the tilted mixture."""
        u = uniform_trains(self.fiber.counts_i, self.fiber.delta, rng, size)
        s, lq = self.sample(u, rng)
        return u, s, lq - self.fiber.log_size("i")

    def log_weight(self, u, s) -> np.ndarray:
        """Normalized log importance weight of the pair against the uniform null."""
        return -self.fiber.log_size("j") - self.logprob(s, u)


def tilted_pointprocess_sample(fiber: BinnedPairFiber, cfg: TiltedPointProcessConfig, u, rng: np.random.Generator):
    return TiltedPointProcess(fiber, cfg).sample(u, rng)
