"""Proposal protocol and finite mixtures of proposals."""

from __future__ import annotations

from typing import Protocol, Sequence

import numpy as np
from scipy.special import logsumexp

from ..errors import DomainError


class Proposal(Protocol):
    """Anything that samples a batch of points and evaluates exact log-probabilities.

    ``sample`` returns ``(points, log_q)`` with a leading batch axis of length
    ``size``; ``logprob`` must work on any support point, including the
    observed data.
    """

    def sample(self, rng: np.random.Generator, size: int): ...

    def logprob(self, points) -> np.ndarray: ...


class MixtureProposal:
    """``Q = sum_l lambda_l Q_l`` with exact log-probabilities."""

    def __init__(self, components: Sequence[Proposal], weights: Sequence[float] | None = None):
        components = list(components)
        if not components:
            raise DomainError("mixture needs at least one component")
        if weights is None:
            weights = np.full(len(components), 1.0 / len(components))
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (len(components),) or (weights <= 0).any():
            raise DomainError("mixture weights must be positive, one per component")
        if not np.isclose(weights.sum(), 1.0, rtol=0, atol=1e-12):
            raise DomainError("mixture weights must sum to 1")
        self.components = components
        self.weights = weights
        self._log_weights = np.log(weights)

    def sample(self, rng: np.random.Generator, size: int):
        which = rng.choice(len(self.components), size=size, p=self.weights)
        points = None
        for ell, comp in enumerate(self.components):
            idx = np.flatnonzero(which == ell)
            if idx.size == 0:
                continue
            pts, _ = comp.sample(rng, idx.size)
            pts = np.asarray(pts)
            if points is None:
                points = np.empty((size,) + pts.shape[1:], dtype=pts.dtype)
            points[idx] = pts
        if points is None:
            pts, _ = self.components[0].sample(rng, 0)
            points = np.asarray(pts)
        return points, self.logprob(points)

    def component_logprobs(self, points) -> np.ndarray:
        """Shape ``(L, batch)`` array of per-component log-probabilities."""
        return np.stack([np.asarray(c.logprob(points), dtype=float) for c in self.components])

    def logprob(self, points) -> np.ndarray:
        lp = self.component_logprobs(points)
        return logsumexp(lp + self._log_weights[:, None], axis=0)


def mixture_sample(mix: MixtureProposal, rng: np.random.Generator, size: int = 1):
    return mix.sample(rng, size)
