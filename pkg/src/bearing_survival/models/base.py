"""Shared survival-model plumbing: curves, step functions, estimator base."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .._validation import check_fitted_dimension


@dataclass
class SurvivalCurve:
    """A survival function sampled on an increasing time grid."""

    times: np.ndarray
    survival: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.survival = np.asarray(self.survival, dtype=np.float64)
        if self.times.shape != self.survival.shape:
            raise ValueError("times and survival must have equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(self.survival < -1e-12) or np.any(self.survival > 1 + 1e-12):
            raise ValueError("survival values must lie in [0, 1]")
        if np.any(np.diff(self.survival) > 1e-12):
            raise ValueError("survival values must be non-increasing")

    def at(self, t) -> np.ndarray:
        """Evaluate the curve at arbitrary times (step, right-continuous)."""
        return step_function_eval(self.times, self.survival, np.asarray(t, float), initial=1.0)


def step_function_eval(times, values, query, initial=0.0):
    """Evaluate a right-continuous step function defined by jump points.

    Returns ``initial`` for query points before the first jump and the last
    value for points beyond the final jump.
    """
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    query = np.asarray(query, dtype=np.float64)
    if times.size == 0:
        out = np.full(query.shape, float(initial))
        return out if out.ndim else float(out)
    idx = np.searchsorted(times, query, side="right") - 1
    out = np.where(idx >= 0, values[np.clip(idx, 0, len(values) - 1)], initial)
    return out if out.ndim else float(out)


class SurvivalModel(BaseEstimator):
    """Base class for the right-censored survival estimators.

    Subclasses implement ``fit(X, duration, event)``, ``predict_risk`` and
    ``predict_survival``; hyperparameters live in ``__init__`` so that
    ``get_params``/``set_params`` drive the random hyperparameter search.
    """

    def predict_risk(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict_survival(self, X, times) -> np.ndarray:
        """Survival probabilities, one row per record of X, one column per time."""
        raise NotImplementedError

    def predict_survival_curve(self, x, times) -> SurvivalCurve:
        """Survival curve for a single covariate vector."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(1, -1)
        surv = self.predict_survival(x, times)[0]
        return SurvivalCurve(times=np.asarray(times, float), survival=np.minimum.accumulate(np.clip(surv, 0.0, 1.0)))

    def _check_X(self, X):
        return check_fitted_dimension(X, self.n_features_in_)
