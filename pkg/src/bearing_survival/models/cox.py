"""Cox proportional hazards fitted by damped Newton on the partial likelihood.

Ties are handled with Breslow's approximation throughout, which matters here
because slice-generated durations tie heavily. The partial log-likelihood,
its gradient and Hessian are exposed as module functions so they can be
checked independently (finite differences, grid search).
"""
from __future__ import annotations

import numpy as np

from .._validation import check_design_matrix, check_survival_target
from ..exceptions import MonotoneLikelihood, NoEvents, Nonconvergence
from .base import SurvivalModel, step_function_eval


class _RiskSetContext:
    """Time-sorted training arrays plus risk-set bookkeeping.

    With records sorted by ascending time, the risk set of an event time is
    a suffix, so every risk-set sum is a reversed cumulative sum gathered at
    the first index of the event's tie block.
    """

    __slots__ = ("X", "event_mask", "event_times", "d_counts", "risk_start",
                 "k_of", "x_event_sum", "n_events")

    def __init__(self, X, duration, event):
        duration, event = check_survival_target(duration, event)
        X = check_design_matrix(X, duration)
        order = np.argsort(duration, kind="stable")
        self.X = X[order]
        ts = duration[order]
        self.event_mask = event[order] == 1
        ts_events = ts[self.event_mask]  # already sorted
        if ts_events.size:
            first = np.concatenate(([True], np.diff(ts_events) > 0))
            self.event_times = ts_events[first]
            self.d_counts = np.diff(np.concatenate(
                (np.flatnonzero(first), [ts_events.size]))).astype(np.float64)
        else:
            self.event_times = ts_events
            self.d_counts = np.empty(0)
        self.risk_start = np.searchsorted(ts, self.event_times, side="left")
        # number of distinct event times at or before each record's time
        self.k_of = np.searchsorted(self.event_times, ts, side="right")
        self.x_event_sum = self.X[self.event_mask].sum(axis=0)
        self.n_events = int(self.event_mask.sum())

    def center(self, mean):
        self.X = self.X - mean
        self.x_event_sum = self.x_event_sum - self.n_events * mean


def _derivatives_from_context(ctx: _RiskSetContext, eta, order=2):
    """Breslow partial log-likelihood and derivatives, fully vectorized.

    Risk-set sums are suffix sums in time order, obtained as total minus the
    prefix cumulative sum. Swapping the summation order turns the per-event
    risk-set means into a single pass over records weighted by the
    cumulative hazard at their own time:
    sum_k d_k S1_k / S0_k = sum_j w_j a_j x_j with a_j = sum_{tau_k <= t_j} d_k / S0_k.
    """
    Xs = ctx.X
    n = Xs.shape[0]
    shift = eta.max()
    w = np.exp(eta - shift)
    prefix = np.empty(n + 1)
    prefix[0] = 0.0
    np.cumsum(w, out=prefix[1:])
    S0 = prefix[n] - prefix[ctx.risk_start]
    ll = float(eta[ctx.event_mask].sum()
               - (ctx.d_counts * (np.log(S0) + shift)).sum())
    if order == 0:
        return ll, None, None

    cumhaz = np.empty(ctx.d_counts.size + 1)
    cumhaz[0] = 0.0
    np.cumsum(ctx.d_counts / S0, out=cumhaz[1:])
    wa = w * cumhaz[ctx.k_of]
    grad = ctx.x_event_sum - Xs.T @ wa
    if order == 1:
        return ll, grad, None

    wx_prefix = np.zeros((n + 1, Xs.shape[1]))
    np.cumsum(w[:, None] * Xs, axis=0, out=wx_prefix[1:])
    means = (wx_prefix[n] - wx_prefix[ctx.risk_start]) / S0[:, None]
    hess = -(Xs.T @ (Xs * wa[:, None]) - means.T @ (means * ctx.d_counts[:, None]))
    return ll, grad, hess


def cox_partial_loglik(beta, X, duration, event) -> float:
    """Breslow partial log-likelihood at ``beta``."""
    ctx = _RiskSetContext(X, duration, event)
    return _derivatives_from_context(ctx, ctx.X @ np.asarray(beta, float), order=0)[0]


def cox_partial_gradient(beta, X, duration, event) -> np.ndarray:
    """Analytic gradient of the Breslow partial log-likelihood."""
    ctx = _RiskSetContext(X, duration, event)
    return _derivatives_from_context(ctx, ctx.X @ np.asarray(beta, float), order=1)[1]


def cox_partial_hessian(beta, X, duration, event) -> np.ndarray:
    """Analytic Hessian of the Breslow partial log-likelihood."""
    ctx = _RiskSetContext(X, duration, event)
    return _derivatives_from_context(ctx, ctx.X @ np.asarray(beta, float), order=2)[2]


def _breslow_from_context(ctx: _RiskSetContext, eta):
    shift = eta.max()
    w = np.exp(eta - shift)
    prefix = np.concatenate(([0.0], np.cumsum(w)))
    S0 = prefix[-1] - prefix[ctx.risk_start]
    increments = ctx.d_counts * np.exp(-np.log(S0) - shift)
    return ctx.event_times.copy(), np.cumsum(increments)


def breslow_cumulative_hazard(scores, duration, event):
    """Breslow baseline cumulative hazard given per-record log-risk scores.

    Returns (event_times, cumulative_hazard) as a step function; the hazard
    increment at an event time t is d_t / sum_{j in risk set} exp(score_j).
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1, 1)
    ctx = _RiskSetContext(scores, duration, event)
    return _breslow_from_context(ctx, ctx.X[:, 0])


class CoxPH(SurvivalModel):
    """Cox proportional hazards with Breslow ties and baseline hazard.

    Newton iterations stop when the gradient infinity-norm falls below
    ``tol``; each step is halved (up to 20 times) until the partial
    likelihood increases. Coefficients escaping ``beta_bound`` raise
    MonotoneLikelihood, which signals separation. An optional ridge
    ``penalizer`` (subtracting penalizer * ||beta||^2) stabilizes designs
    with numerically collinear covariates; at the default 0 the fit is
    plain maximum partial likelihood.
    """

    def __init__(self, max_iter: int = 100, tol: float = 1e-7,
                 beta_bound: float = 1e3, penalizer: float = 0.0):
        self.max_iter = max_iter
        self.tol = tol
        self.beta_bound = beta_bound
        self.penalizer = penalizer

    def fit(self, X, duration, event):
        if self.penalizer < 0:
            raise ValueError("penalizer must be non-negative")
        ctx = _RiskSetContext(X, duration, event)
        if ctx.n_events == 0:
            raise NoEvents("cannot fit a Cox model without observed events")
        self.train_mean_ = ctx.X.mean(axis=0)
        ctx.center(self.train_mean_)
        d = ctx.X.shape[1]
        pen = self.penalizer

        def penalized_derivatives(b):
            ll, grad, hess = _derivatives_from_context(ctx, ctx.X @ b, order=2)
            ll -= pen * float(b @ b)
            grad = grad - 2.0 * pen * b
            if pen:
                hess = hess - 2.0 * pen * np.eye(d)
            return ll, grad, hess

        beta = np.zeros(d)
        ll, grad, hess = penalized_derivatives(beta)
        grad_norm = np.inf
        for _ in range(self.max_iter):
            grad_norm = float(np.abs(grad).max()) if d else 0.0
            if grad_norm < self.tol:
                break
            try:
                step = np.linalg.solve(-hess, grad)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(-hess, grad, rcond=None)[0]
            # a predicted gain below float resolution of the likelihood with
            # an already-small gradient is the numerical optimum, even if the
            # gradient has not quite crossed the tolerance
            if grad_norm < 1e-5 and 0.5 * float(grad @ step) < 1e-12 * (1.0 + abs(ll)):
                break
            # the accepted trial's derivatives double as the next iteration's
            scale = 1.0
            accepted = False
            for _ in range(20):
                candidate = beta + scale * step
                cand = penalized_derivatives(candidate)
                if cand[0] > ll:
                    beta, (ll, grad, hess) = candidate, cand
                    accepted = True
                    break
                scale *= 0.5
            if not accepted:
                # the likelihood cannot improve in float arithmetic; that is
                # the numerical optimum unless the gradient is still large
                if grad_norm > 1e-3:
                    raise Nonconvergence(
                        "Newton step failed to increase the partial likelihood",
                        n_iter=self.max_iter, gradient_norm=grad_norm,
                    )
                break
            if np.abs(beta).max() > self.beta_bound:
                raise MonotoneLikelihood(
                    "coefficients diverged beyond "
                    f"{self.beta_bound:g}; covariates likely separate the data"
                )
        else:
            raise Nonconvergence(
                f"no convergence in {self.max_iter} iterations "
                f"(gradient inf-norm {grad_norm:.3e})",
                n_iter=self.max_iter, gradient_norm=grad_norm,
            )

        self.coef_ = beta
        self.n_features_in_ = d
        self.log_likelihood_ = ll
        times, cumhaz = _breslow_from_context(ctx, ctx.X @ beta)
        self.baseline_times_ = times
        self.baseline_cumhaz_ = cumhaz
        return self

    def _linear_predictor(self, X):
        X = self._check_X(X)
        return (X - self.train_mean_) @ self.coef_

    def predict_risk(self, X):
        return self._linear_predictor(X)

    def cumulative_hazard(self, X, times):
        h0 = step_function_eval(self.baseline_times_, self.baseline_cumhaz_,
                                np.asarray(times, float), initial=0.0)
        return np.exp(self._linear_predictor(X))[:, None] * h0[None, :]

    def predict_survival(self, X, times):
        return np.exp(-self.cumulative_hazard(X, times))

    def _get_state(self):
        return {
            "max_iter": self.max_iter,
            "tol": self.tol,
            "beta_bound": self.beta_bound,
            "penalizer": self.penalizer,
            "coef": self.coef_.tolist(),
            "train_mean": self.train_mean_.tolist(),
            "baseline_times": self.baseline_times_.tolist(),
            "baseline_cumhaz": self.baseline_cumhaz_.tolist(),
            "log_likelihood": self.log_likelihood_,
        }

    @classmethod
    def _from_state(cls, state):
        model = cls(max_iter=state["max_iter"], tol=state["tol"],
                    beta_bound=state["beta_bound"], penalizer=state.get("penalizer", 0.0))
        model.coef_ = np.array(state["coef"])
        model.train_mean_ = np.array(state["train_mean"])
        model.baseline_times_ = np.array(state["baseline_times"])
        model.baseline_cumhaz_ = np.array(state["baseline_cumhaz"])
        model.log_likelihood_ = state["log_likelihood"]
        model.n_features_in_ = model.coef_.size
        return model
