"""Exception hierarchy shared by every regrisk module."""


class RegriskError(ValueError):
    """Base class for all regrisk errors."""


class InvalidSpecError(RegriskError):
    """A covariance or configuration spec violates its invariants."""


class InvalidParameterError(RegriskError):
    """A scalar parameter (alpha, lambda, sigma, ...) is out of range."""


class InfeasibleRegimeError(RegriskError):
    """The requested estimator is not defined at this (alpha, lambda) point."""


class RankError(RegriskError):
    """A matrix is numerically rank deficient where full rank is required."""


class NumericalError(RegriskError):
    """A root bracket could not be established or a solve did not converge."""


class DegenerateDenominatorError(RegriskError):
    """The risk denominator 1 - alpha * a2 is not positive."""


class ConfigError(RegriskError):
    """A config file could not be parsed or a field is invalid."""
