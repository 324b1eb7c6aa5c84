"""Tilted label-permutation proposal for two-sample permutation tests.

Values are held fixed and sorted in decreasing order. A labeling with ``r``
ones is scored by ``k``, the number of ones that land on the ``r`` largest
values; the proposal gives it probability proportional to ``exp(theta * k)``.
``theta = 0`` is the uniform (null) law. Because every labeling corresponds to
``r! (m - r)!`` permutations under both target and proposal, working with
labelings instead of permutations leaves the importance weights unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from ..errors import DomainError


def log_binom(a, b):
    """log C(a, b), with C(a, b) = 0 (log = -inf) outside 0 <= b <= a."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ok = (b >= 0) & (a >= b)
    with np.errstate(invalid="ignore"):
        val = gammaln(a + 1) - gammaln(b + 1) - gammaln(a - b + 1)
    return np.where(ok, val, -np.inf)


@dataclass(frozen=True)
class PermutationFiber:
    values: np.ndarray
    r: int
    order: np.ndarray = field(init=False, repr=False)

    def __init__(self, values, r: int):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or not np.isfinite(values).all():
            raise DomainError("values must be a finite 1-d array")
        if not 0 <= r <= values.size:
            raise DomainError(f"r = {r} outside [0, {values.size}]")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "r", int(r))
        # positions of the values in decreasing order, ties broken by position
        object.__setattr__(self, "order", np.argsort(-values, kind="stable"))

    @property
    def m(self) -> int:
        return self.values.size

    def log_size(self) -> float:
        return float(log_binom(self.m, self.r))

    def check(self, labels) -> np.ndarray:
        labels = np.asarray(labels).astype(bool)
        if labels.shape[-1] != self.m:
            raise DomainError("labeling has the wrong length")
        if not (labels.sum(axis=-1) == self.r).all():
            raise DomainError(f"labeling must have exactly {self.r} ones")
        return labels

    def uniform_sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        keys = rng.random((size, self.m))
        ranks = np.argsort(np.argsort(keys, axis=1), axis=1)
        return ranks < self.r


class TiltedPermutation:
    def __init__(self, fiber: PermutationFiber, theta: float):
        self.fiber = fiber
        self.theta = float(theta)
        m, r = fiber.m, fiber.r
        k = np.arange(r + 1)
        self._log_terms = log_binom(r, k) + log_binom(m - r, r - k) + self.theta * k
        self.log_norm = float(logsumexp(self._log_terms))
        self._k_probs = np.exp(self._log_terms - self.log_norm)

    def overlap(self, labels) -> np.ndarray:
        """Number of ones among the ``r`` largest values."""
        labels = self.fiber.check(labels)
        top = self.fiber.order[: self.fiber.r]
        return labels[..., top].sum(axis=-1)

    def logprob(self, labels) -> np.ndarray:
        k = self.overlap(labels)
        return self.theta * k - self.log_norm

    def log_weight(self, labels) -> np.ndarray:
        """log of uniform-target mass over proposal mass (normalized)."""
        return -self.fiber.log_size() - self.logprob(labels)

    def sample(self, rng: np.random.Generator, size: int):
        m, r = self.fiber.m, self.fiber.r
        k = rng.choice(r + 1, size=size, p=self._k_probs)
        labels_sorted = np.zeros((size, m), dtype=bool)
        if r > 0:
            top_rank = np.argsort(np.argsort(rng.random((size, r)), axis=1), axis=1)
            labels_sorted[:, :r] = top_rank < k[:, None]
        if m - r > 0:
            bot_rank = np.argsort(np.argsort(rng.random((size, m - r)), axis=1), axis=1)
            labels_sorted[:, r:] = bot_rank < (r - k)[:, None]
        labels = np.empty_like(labels_sorted)
        labels[:, self.fiber.order] = labels_sorted
        return labels, self.theta * k - self.log_norm


def tilted_permutation_sample(fiber: PermutationFiber, theta: float, rng: np.random.Generator, size: int = 1):
    return TiltedPermutation(fiber, theta).sample(rng, size)


def tilted_permutation_logprob(fiber: PermutationFiber, theta: float, labeling) -> np.ndarray | float:
    out = TiltedPermutation(fiber, theta).logprob(labeling)
    return float(out) if np.ndim(out) == 0 else out
