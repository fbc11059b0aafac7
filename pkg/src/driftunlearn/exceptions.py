"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericError (and subclasses) -> 4.
"""


class DriftUnlearnError(Exception):
    """Base class for all package errors."""


class ShapeError(DriftUnlearnError, ValueError):
    """Dimension mismatch or incompatible array shape."""


class ConfigError(DriftUnlearnError, ValueError):
    """Invalid or unknown configuration."""


class DataError(DriftUnlearnError, ValueError):
    """Malformed, missing, or corrupt input data."""


class NumericError(DriftUnlearnError, RuntimeError):
    """Numerical failure during fitting or evaluation."""


class TrainingDivergedError(NumericError):
    """Non-finite loss or gradient encountered while training."""


class SingularMatrixError(NumericError):
    """Linear system unsolvable even after ridge jitter."""


class DegenerateMetricError(NumericError):
    """Metric undefined for the given data (e.g. zero-variance R^2 target)."""


class FrozenModelError(DriftUnlearnError, RuntimeError):
    """Attempt to mutate a model that has been frozen after training."""
