"""Input validation helpers.

Everything downstream assumes float64 C-contiguous arrays, strict shape
checks, and no silent broadcasting; these helpers enforce that at the
estimator boundaries.
"""

import numpy as np

from .exceptions import DataError, ShapeError


def as_matrix(X, name="X", require_finite=True):
    """Coerce to a 2-D float64 array of shape (n_samples, n_features)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {X.shape}")
    if X.shape[0] == 0 or X.shape[1] == 0:
        raise ShapeError(f"{name} must be non-empty, got shape {X.shape}")
    if require_finite and not np.all(np.isfinite(X)):
        raise DataError(f"{name} contains non-finite values")
    return np.ascontiguousarray(X)


def as_vector(x, name="x", require_finite=True):
    """Coerce to a 1-D float64 array."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {x.shape}")
    if require_finite and not np.all(np.isfinite(x)):
        raise DataError(f"{name} contains non-finite values")
    return np.ascontiguousarray(x)


def check_n_features(X, expected, name="X"):
    """Reject feature-count mismatches before any computation."""
    if X.shape[-1] != expected:
        raise ShapeError(
            f"{name} has {X.shape[-1]} features, expected {expected}"
        )


def check_same_length(a, b, name_a="a", name_b="b"):
    if a.shape != b.shape:
        raise ShapeError(
            f"{name_a} and {name_b} must have identical shapes, "
            f"got {a.shape} and {b.shape}"
        )
