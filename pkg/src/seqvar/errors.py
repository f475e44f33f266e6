"""Exception hierarchy shared by all modules."""


class SeqvarError(Exception):
    """Base class for all package errors."""


class DomainError(SeqvarError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class UsageError(SeqvarError, ValueError):
    """A valid call made in an unsupported way (improper prior, empty input, ...)."""


class UnavailableStatisticError(UsageError):
    """A sufficient statistic was requested for an empty data block."""


class ConfigError(SeqvarError, ValueError):
    """A configuration file could not be parsed or validated."""


class NumericalError(SeqvarError, RuntimeError):
    """A numerical routine failed to reach its accuracy target.

    ``index`` identifies the offending coordinate or grid point when known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DegenerateDensityError(NumericalError):
    """A log-density is -inf on every grid point."""


class InfeasibleRegionError(NumericalError):
    """Rejection sampling acceptance rate fell below the feasibility floor."""
