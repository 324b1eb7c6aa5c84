"""Importance-sampling p-values that stay valid at any Monte Carlo sample size."""

from .errors import (
    DegenerateWeights,
    DomainError,
    InfeasibleMargins,
    ISPValueError,
    MixedWeightScales,
    NonNormalizedWeights,
    NotInFiber,
    ShapeError,
    TooLarge,
)
from .estimators import (
    Estimator,
    LogWeight,
    ObservedPoint,
    PValueReport,
    WeightedDraw,
    WeightedSample,
    batch_estimates,
    ess_diagnostic,
    p_hat,
    p_hat_star,
    p_tilde,
    p_tilde_star,
    report,
    two_sided_combine,
    wald_upper_limit,
)
from .inference import ConfidenceSet, MultiTestOutcome, bonferroni, invert_confidence_set, two_sided_rasch_pvalue
from .statistics import PooledTransform, StatisticKind, evaluate_statistic

__version__ = "0.1.0"
