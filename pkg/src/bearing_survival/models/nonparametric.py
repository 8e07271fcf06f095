"""Kaplan-Meier product-limit estimation and the Nelson-Aalen hazard."""
from __future__ import annotations

import numpy as np

from .._validation import check_survival_target
from .base import SurvivalCurve, SurvivalModel, step_function_eval


def _counts_at_unique_times(duration, event):
    """Distinct times with the number at risk and number of events at each."""
    order = np.argsort(duration, kind="stable")
    t = duration[order]
    e = event[order]
    times, first = np.unique(t, return_index=True)
    n_total = t.size
    at_risk = n_total - first
    d = np.add.reduceat(e, first)
    return times, at_risk.astype(np.float64), d.astype(np.float64)


def kaplan_meier(duration, event, conf_level: float = 0.95) -> SurvivalCurve:
    """Product-limit survival estimate with Greenwood confidence bands.

    Records censored at t stay in the risk set at t and leave afterwards.
    The curve is sampled at every distinct time in the data.
    """
    duration, event = check_survival_target(duration, event)
    times, n, d = _counts_at_unique_times(duration, event)

    factors = 1.0 - d / n
    survival = np.cumprod(factors)

    # Greenwood: Var = S(t)^2 * sum_{t_i <= t} d_i / (n_i (n_i - d_i))
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(n > d, d / (n * (n - d)), np.inf)
    cum = np.cumsum(terms)
    var = np.zeros_like(survival)
    alive = survival > 0.0
    var[alive] = survival[alive] ** 2 * cum[alive]
    from scipy.stats import norm

    z = norm.ppf(0.5 + conf_level / 2.0)
    se = np.sqrt(var)
    lower = np.clip(survival - z * se, 0.0, 1.0)
    upper = np.clip(survival + z * se, 0.0, 1.0)
    return SurvivalCurve(times=times, survival=survival, lower=lower, upper=upper)


def nelson_aalen(duration, event):
    """Cumulative-hazard step function (times, values) of a censored sample."""
    duration, event = check_survival_target(duration, event)
    times, n, d = _counts_at_unique_times(duration, event)
    keep = d > 0
    return times[keep], np.cumsum(d[keep] / n[keep])


class KaplanMeierBaseline(SurvivalModel):
    """Covariate-free baseline: every record gets the training KM curve."""

    def __init__(self, conf_level: float = 0.95):
        self.conf_level = conf_level

    def fit(self, X, duration, event):
        X = np.asarray(X, dtype=np.float64)
        self.n_features_in_ = X.shape[1] if X.ndim == 2 else 0
        self.curve_ = kaplan_meier(duration, event, conf_level=self.conf_level)
        return self

    def predict_risk(self, X):
        X = self._check_X(X)
        return np.zeros(X.shape[0])

    def predict_survival(self, X, times):
        X = self._check_X(X)
        row = step_function_eval(self.curve_.times, self.curve_.survival,
                                 np.asarray(times, float), initial=1.0)
        return np.tile(row, (X.shape[0], 1))

    def _get_state(self):
        return {
            "conf_level": self.conf_level,
            "n_features_in": int(self.n_features_in_),
            "times": self.curve_.times.tolist(),
            "survival": self.curve_.survival.tolist(),
            "lower": self.curve_.lower.tolist(),
            "upper": self.curve_.upper.tolist(),
        }

    @classmethod
    def _from_state(cls, state):
        model = cls(conf_level=state["conf_level"])
        model.n_features_in_ = state["n_features_in"]
        model.curve_ = SurvivalCurve(
            times=np.array(state["times"]),
            survival=np.array(state["survival"]),
            lower=np.array(state["lower"]),
            upper=np.array(state["upper"]),
        )
        return model
