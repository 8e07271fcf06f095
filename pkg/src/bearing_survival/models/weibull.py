"""Weibull accelerated failure time model for right-censored data.

The scale acts multiplicatively on time through a log-linear link,
lam(x) = exp(b0 + b.x), and the shape k is kept positive through a log
parameterization. The censored log-likelihood is maximized by damped Newton
with analytic gradient and Hessian; an optional ridge penalty on the
covariate coefficients stabilizes small samples.
"""
from __future__ import annotations

import numpy as np

from .._validation import check_design_matrix, check_survival_target
from ..exceptions import NoEvents, Nonconvergence
from .base import SurvivalModel

_Z_CLIP = 500.0  # caps exp(z) during line search on wild iterates


def weibull_loglik(params, X, duration, event, penalizer=0.0, fixed_shape=None):
    """Right-censored Weibull AFT log-likelihood (penalized)."""
    ll, _, _ = _derivatives(params, X, duration, event, penalizer, fixed_shape, order=0)
    return ll


def weibull_gradient(params, X, duration, event, penalizer=0.0, fixed_shape=None):
    """Analytic gradient of the penalized log-likelihood."""
    _, grad, _ = _derivatives(params, X, duration, event, penalizer, fixed_shape, order=1)
    return grad


def _unpack(params, fixed_shape):
    if fixed_shape is None:
        return float(np.exp(params[0])), params[1], params[2:]
    return float(fixed_shape), params[0], params[1:]


def _derivatives(params, X, duration, event, penalizer, fixed_shape, order=2):
    """Log-likelihood with gradient/Hessian over (log k, intercept, coefs).

    Uses z = k (log t - eta); an event contributes log k - log t + z - e^z
    and a censored record contributes -e^z.
    """
    k, b0, b = _unpack(params, fixed_shape)
    eta = b0 + X @ b
    logt = np.log(duration)
    z = np.clip(k * (logt - eta), -_Z_CLIP, _Z_CLIP)
    ez = np.exp(z)
    delta = event.astype(np.float64)

    ll = float((delta * (np.log(k) - logt + z) - ez).sum()) - penalizer * float(b @ b)
    if order == 0:
        return ll, None, None

    # derivatives with respect to eta and u = log k
    g_eta = k * (ez - delta)
    grad_eta_part = np.concatenate(([g_eta.sum()], X.T @ g_eta))
    if fixed_shape is None:
        g_u = float((delta * (1.0 + z) - ez * z).sum())
        grad = np.concatenate(([g_u], grad_eta_part))
    else:
        grad = grad_eta_part
    if penalizer and b.size:
        grad[-b.size:] -= 2.0 * penalizer * b
    if order == 1:
        return ll, grad, None

    h_ee = -(k**2) * ez  # d2/d eta2, per record
    Xa = np.concatenate((np.ones((X.shape[0], 1)), X), axis=1)
    H_eta = (Xa * h_ee[:, None]).T @ Xa
    if fixed_shape is None:
        h_uu = float((delta * z - ez * z * (1.0 + z)).sum())
        h_ue = -delta * k + k * ez * (z + 1.0)
        cross = np.concatenate(([h_ue.sum()], X.T @ h_ue))
        dim = 2 + X.shape[1]
        hess = np.zeros((dim, dim))
        hess[0, 0] = h_uu
        hess[0, 1:] = cross
        hess[1:, 0] = cross
        hess[1:, 1:] = H_eta
    else:
        hess = H_eta
    if penalizer and b.size:
        hess[-b.size:, -b.size:] -= 2.0 * penalizer * np.eye(b.size)
    return ll, grad, hess


class WeibullAFT(SurvivalModel):
    """Weibull AFT regression with S(t | x) = exp(-(t / lam(x))^k)."""

    def __init__(self, penalizer: float = 0.0, max_iter: int = 200,
                 tol: float = 1e-7, fixed_shape: float | None = None):
        self.penalizer = penalizer
        self.max_iter = max_iter
        self.tol = tol
        self.fixed_shape = fixed_shape

    def fit(self, X, duration, event):
        duration, event = check_survival_target(duration, event)
        X = check_design_matrix(X, duration)
        if event.sum() == 0:
            raise NoEvents("cannot fit a Weibull AFT model without observed events")
        if self.penalizer < 0:
            raise ValueError("penalizer must be non-negative")
        self.train_mean_ = X.mean(axis=0)
        Xc = X - self.train_mean_
        d = Xc.shape[1]

        start = [np.log(duration.mean())] + [0.0] * d
        if self.fixed_shape is None:
            start = [0.0] + start
        params = np.array(start)

        args = (Xc, duration, event, self.penalizer, self.fixed_shape)
        ll = weibull_loglik(params, *args)
        grad_norm = np.inf
        for _ in range(self.max_iter):
            _, grad, hess = _derivatives(params, *args, order=2)
            grad_norm = float(np.abs(grad).max())
            if grad_norm < self.tol:
                break
            # Levenberg damping: away from the optimum the Hessian need not
            # be negative definite, so inflate the diagonal until the solved
            # step is an ascent direction
            neg_hess = -hess
            identity = np.eye(len(params))
            ridge = 0.0
            step = None
            for _ in range(40):
                try:
                    candidate_step = np.linalg.solve(neg_hess + ridge * identity, grad)
                except np.linalg.LinAlgError:
                    candidate_step = None
                if candidate_step is not None and float(grad @ candidate_step) > 0.0:
                    step = candidate_step
                    break
                ridge = max(ridge * 10.0, 1e-6 * max(1.0, float(np.abs(neg_hess).max())))
            if step is None:
                step = grad
            # a predicted gain below the float resolution of the likelihood
            # with an already-small gradient is the numerical optimum
            if grad_norm < 1e-5 and 0.5 * float(grad @ step) < 1e-12 * (1.0 + abs(ll)):
                break
            scale = 1.0
            for _ in range(20):
                candidate = params + scale * step
                cand_ll = weibull_loglik(candidate, *args)
                if cand_ll > ll:
                    break
                scale *= 0.5
            else:
                # stalled line search at the numerical optimum counts as
                # converged; with a large gradient it is a genuine failure
                if grad_norm > 1e-3:
                    raise Nonconvergence(
                        "Newton step failed to increase the Weibull likelihood",
                        n_iter=self.max_iter, gradient_norm=grad_norm,
                    )
                break
            params, ll = candidate, cand_ll
        else:
            raise Nonconvergence(
                f"no convergence in {self.max_iter} iterations "
                f"(gradient inf-norm {grad_norm:.3e})",
                n_iter=self.max_iter, gradient_norm=grad_norm,
            )

        k, b0, b = _unpack(params, self.fixed_shape)
        self.shape_ = k
        self.intercept_ = float(b0)
        self.coef_ = np.asarray(b, dtype=np.float64)
        self.n_features_in_ = d
        self.log_likelihood_ = ll
        return self

    def _log_scale(self, X):
        X = self._check_X(X)
        return self.intercept_ + (X - self.train_mean_) @ self.coef_

    def predict_risk(self, X):
        # shorter characteristic life = higher risk
        return -self._log_scale(X)

    def predict_survival(self, X, times):
        times = np.asarray(times, dtype=np.float64)
        log_scale = self._log_scale(X)
        with np.errstate(divide="ignore"):
            log_t = np.where(times > 0, np.log(times), -np.inf)
        z = self.shape_ * (log_t[None, :] - log_scale[:, None])
        return np.exp(-np.exp(np.clip(z, -_Z_CLIP, _Z_CLIP)))

    def _get_state(self):
        return {
            "penalizer": self.penalizer,
            "max_iter": self.max_iter,
            "tol": self.tol,
            "fixed_shape": self.fixed_shape,
            "shape": self.shape_,
            "intercept": self.intercept_,
            "coef": self.coef_.tolist(),
            "train_mean": self.train_mean_.tolist(),
            "log_likelihood": self.log_likelihood_,
        }

    @classmethod
    def _from_state(cls, state):
        model = cls(penalizer=state["penalizer"], max_iter=state["max_iter"],
                    tol=state["tol"], fixed_shape=state["fixed_shape"])
        model.shape_ = state["shape"]
        model.intercept_ = state["intercept"]
        model.coef_ = np.array(state["coef"])
        model.train_mean_ = np.array(state["train_mean"])
        model.log_likelihood_ = state["log_likelihood"]
        model.n_features_in_ = model.coef_.size
        return model
