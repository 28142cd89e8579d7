"""Exception hierarchy shared by the library and the CLI.

Each class maps to one CLI exit code so that scripted callers can
distinguish user mistakes from bad data from numerical trouble.
"""

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4
EXIT_BOUND = 5


class DpCoverageError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigurationError(DpCoverageError):
    """Invalid or conflicting user-supplied configuration (exit 2)."""

    exit_code = EXIT_USAGE


class DataError(DpCoverageError):
    """Unusable input data: missing values, bad cells, too few rows (exit 3)."""

    exit_code = EXIT_DATA


class NumericalError(DpCoverageError):
    """Numerical failure: non-convergence, undetectable regimes (exit 4)."""

    exit_code = EXIT_NUMERICAL


class ValidationBoundError(DpCoverageError):
    """A validation run exceeded its configured deviation bound (exit 5)."""

    exit_code = EXIT_BOUND
