"""Input validation helpers shared by the estimators and metric functions."""
from __future__ import annotations

import numpy as np

from .exceptions import DimensionMismatch, EmptyInput


def as_float_array(x, name="array", ndim=1):
    """Coerce ``x`` to a float64 array of the given dimensionality."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != ndim:
        if ndim == 2 and arr.ndim == 1:
            arr = arr.reshape(1, -1)
        else:
            raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_survival_target(duration, event):
    """Validate (duration, event) pairs for survival estimators."""
    duration = as_float_array(duration, "duration")
    event = np.asarray(event)
    if event.shape != duration.shape:
        raise ValueError("duration and event must have the same length")
    if duration.size == 0:
        raise EmptyInput("no observations supplied")
    if np.any(duration <= 0):
        raise ValueError("durations must be positive")
    uniq = np.unique(event)
    if not np.all(np.isin(uniq, (0, 1))):
        raise ValueError("event indicators must be 0 or 1")
    return duration, event.astype(np.int64)


def check_design_matrix(X, duration=None):
    """Validate a covariate matrix, optionally against a target length."""
    X = as_float_array(X, "X", ndim=2)
    if duration is not None and X.shape[0] != duration.shape[0]:
        raise ValueError("X and duration must have the same number of rows")
    return X


def check_fitted_dimension(X, n_features):
    """Raise DimensionMismatch when ``X`` disagrees with the fitted model."""
    X = check_design_matrix(X)
    if X.shape[1] != n_features:
        raise DimensionMismatch(
            f"model was fitted with {n_features} covariates, got {X.shape[1]}"
        )
    return X
