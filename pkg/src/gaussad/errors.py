"""Exception hierarchy shared by the library and the CLI.

The CLI maps these onto distinct exit codes: usage errors exit 1, data
errors exit 2, numeric errors exit 3.
"""


class GaussAdError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(GaussAdError):
    """Inconsistent or invalid options / arguments."""

    exit_code = 1


class DataError(GaussAdError):
    """Malformed, inconsistent, or missing input data."""

    exit_code = 2


class NumericError(GaussAdError):
    """Numerically infeasible operation (singular matrix, empty spectrum, ...)."""

    exit_code = 3
