"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
DataError -> 3, NumericalAbort -> 4.
"""


class AccentConvError(Exception):
    """Base class for all package errors."""


class ConfigError(AccentConvError):
    """Invalid configuration, missing asset, or stage-dependency violation."""


class DataError(AccentConvError):
    """Unreadable, malformed, or degenerate input data."""


class NumericalAbort(AccentConvError):
    """A training step produced NaN/Inf; carries the offending term name."""


class InfeasibleAlignmentError(AccentConvError):
    """Label sequence cannot be aligned to the given number of frames."""
