"""Mixture proposal for conditional inference on a covariate effect in binary matrices.

Under the logistic model with row, column and covariate effects, the law of the
matrix given its margins is ``P_theta(x) ~ exp(theta * t(x))`` with
``t(x) = sum_ij x_ij v_ij``. One sample from a mixture of theta-tilted
conditional Poisson samplers serves every ``theta`` on a grid: only the
weights ``theta * t(x) - log Q(x)`` change with ``theta``.
"""

from __future__ import annotations

import numpy as np

from ..errors import NotInFiber
from ..estimators import LogWeight
from ..statistics import linear_covariate
from .base import MixtureProposal
from .tables import ConditionalPoissonColumns, MarginFiber


class RaschMixture(MixtureProposal):
    """Equal-weight mixture of ``ConditionalPoissonColumns(fiber, v, theta_l)``."""

    def __init__(self, fiber: MarginFiber, covariates, thetas, batch_size: int = 4096):
        self.fiber = fiber
        self.covariates = np.asarray(covariates, dtype=float)
        self.thetas = np.asarray(thetas, dtype=float)
        super().__init__([ConditionalPoissonColumns(fiber, self.covariates, th, batch_size) for th in self.thetas])

    def statistic(self, matrices):
        return linear_covariate(matrices, self.covariates)


def rasch_log_weight(theta: float, matrix, mix: RaschMixture, covariates=None):
    """Unnormalized log weight ``theta * t(x) - log Q(x)``.

    For a single matrix outside the fiber this raises; for a batch, such
    entries get ``-inf``. A single matrix returns a :class:`LogWeight` with
    ``normalized=False``.
    """
    v = mix.covariates if covariates is None else np.asarray(covariates, dtype=float)
    x = np.asarray(matrix)
    inside = mix.fiber.contains(x)
    if x.ndim == 2:
        if not inside:
            raise NotInFiber("matrix does not have the fiber's margins")
        return LogWeight(float(theta * linear_covariate(x, v) - mix.logprob(x[None])[0]), normalized=False)
    t = linear_covariate(x, v)
    lq = mix.logprob(x)
    return np.where(inside, theta * t - lq, -np.inf)
