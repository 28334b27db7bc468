"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes, so estimators should raise the
most specific class that applies.
"""


class MktEffError(Exception):
    """Base class for all package errors."""


class DataError(MktEffError):
    """Invalid or degenerate input data (bad rows, empty panels, zero variance)."""


class ConfigError(MktEffError):
    """Invalid configuration or specification values."""


class NumericalError(MktEffError):
    """Numerical failure during estimation (singular systems, failed factorizations)."""
