"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code contract: bad input or configuration
exits 2, numerical failure exits 3.
"""


class VolspillError(Exception):
    """Base class for all package errors."""


class DataError(VolspillError, ValueError):
    """Invalid input data or configuration (CLI exit code 2)."""


class NumericalError(VolspillError, RuntimeError):
    """Estimation or decomposition failure (CLI exit code 3)."""
