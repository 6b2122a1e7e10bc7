"""Exception types shared across the package.

The CLI maps these onto process exit codes, so library code should raise
the most specific type that applies.
"""


class PopergmError(Exception):
    """Base class for all popergm errors."""

    exit_code = 1


class ConfigError(PopergmError):
    """Invalid run configuration (bad keys, out-of-range settings)."""

    exit_code = 2


class DataError(PopergmError):
    """Malformed or inconsistent input data."""

    exit_code = 3


class NumericalError(PopergmError):
    """Numerical failure, e.g. a matrix that should be SPD is not."""

    exit_code = 4
