"""Normal(0, 1) target with a Normal(mu, sigma) proposal."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from ..estimators import LogWeight

_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


@dataclass(frozen=True)
class GaussianPair:
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("sigma must be positive")

    def log_target(self, x):
        x = np.asarray(x, dtype=float)
        return -0.5 * x**2 - _LOG_SQRT_2PI

    def logprob(self, x):
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return -0.5 * z**2 - _LOG_SQRT_2PI - math.log(self.sigma)

    def log_weight(self, x):
        """``log phi(x) - log phi_{mu,sigma}(x)``; exact, normalized."""
        x = np.asarray(x, dtype=float)
        z = (x - self.mu) / self.sigma
        return math.log(self.sigma) + 0.5 * (z**2 - x**2)

    def sample(self, rng: np.random.Generator, size: int):
        x = self.mu + self.sigma * rng.standard_normal(size)
        return x, self.logprob(x)


def gaussian_sample_and_weight(cfg: GaussianPair, rng: np.random.Generator, size: int | None = None):
    """Draw from the proposal and return ``(point, weight)``.

    With ``size=None`` a single float and a :class:`LogWeight` come back; with
    an integer size, two arrays (log weights are normalized).
    """
    n = 1 if size is None else size
    x = cfg.mu + cfg.sigma * rng.standard_normal(n)
    lw = cfg.log_weight(x)
    if size is None:
        return float(x[0]), LogWeight(float(lw[0]), normalized=True)
    return x, lw
