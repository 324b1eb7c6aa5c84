"""Exception types raised across the package."""


class ISPValueError(ValueError):
    """Base class for all package errors."""


class NonNormalizedWeights(ISPValueError):
    """An estimator that needs exact dP/dQ weights got weights known only up to a constant."""


class MixedWeightScales(ISPValueError):
    """Observed and proposal weights do not share the same normalization."""


class DomainError(ISPValueError):
    pass


class DegenerateWeights(ISPValueError):
    pass


class ShapeError(ISPValueError):
    pass


class InfeasibleMargins(ISPValueError):
    """No binary matrix has the requested row and column sums."""


class NotInFiber(ISPValueError):
    pass


class TooLarge(ISPValueError):
    """Enumeration refused because the state space exceeds the configured bound."""
