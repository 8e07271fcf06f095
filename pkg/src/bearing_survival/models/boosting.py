"""Gradient boosting on the Cox partial likelihood with regression trees.

Each round fits a least-squares regression tree to the current martingale
residuals (the per-record gradient of the partial log-likelihood with
respect to the scores) and adds it to the score with the learning rate. A
round whose contribution would lower the training partial likelihood is
scaled down, and skipped entirely if still harmful, so the likelihood path
is non-decreasing by construction. The final scores feed a Breslow baseline
hazard, which makes the model fully evaluable (survival curves, Brier).
"""
from __future__ import annotations

import numpy as np
from sklearn.tree import DecisionTreeRegressor

from .._validation import check_design_matrix, check_survival_target
from ..exceptions import NoEvents
from .base import SurvivalModel, step_function_eval
from .cox import breslow_cumulative_hazard, cox_partial_loglik


class _FrozenTree:
    """Array-form regression tree; prediction path used for fit and load."""

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)

    @classmethod
    def from_sklearn(cls, tree):
        t = tree.tree_
        return cls(t.feature, t.threshold, t.children_left, t.children_right,
                   t.value[:, 0, 0])

    def predict(self, X):
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            active = self.left[node] >= 0
            if not active.any():
                return self.value[node]
            rows = np.flatnonzero(active)
            go_left = X[rows, self.feature[node[rows]]] <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])

    def to_dict(self):
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }


def _partial_loglik_scores(scores, duration, event):
    """Breslow partial log-likelihood of fixed per-record scores."""
    return cox_partial_loglik(np.ones(1), scores.reshape(-1, 1), duration, event)


class GradientBoostedCox(SurvivalModel):
    """Functional gradient boosting of the Cox partial likelihood."""

    def __init__(self, n_rounds: int = 100, learning_rate: float = 0.1,
                 max_depth: int = 2, seed: int = 0):
        self.n_rounds = n_rounds
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.seed = seed

    def fit(self, X, duration, event):
        duration, event = check_survival_target(duration, event)
        X = check_design_matrix(X, duration)
        if self.n_rounds < 1:
            raise ValueError("n_rounds must be at least 1")
        if not 0.0 <= self.learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in [0, 1]")
        if event.sum() == 0:
            raise NoEvents("cannot boost the partial likelihood without events")

        n = X.shape[0]
        scores = np.zeros(n)
        ll = _partial_loglik_scores(scores, duration, event)
        self.train_loglik_ = [ll]
        self.trees_ = []
        self.tree_scales_ = []
        for round_idx in range(self.n_rounds):
            times, cumhaz = breslow_cumulative_hazard(scores, duration, event)
            h_at_t = step_function_eval(times, cumhaz, duration, initial=0.0)
            residual = event - h_at_t * np.exp(scores)

            sk_tree = DecisionTreeRegressor(
                max_depth=self.max_depth, random_state=self.seed + round_idx)
            sk_tree.fit(X, residual)
            tree = _FrozenTree.from_sklearn(sk_tree)
            step = tree.predict(X)

            scale = self.learning_rate
            accepted = scale == 0.0
            for _ in range(10):
                if accepted:
                    break
                cand = scores + scale * step
                cand_ll = _partial_loglik_scores(cand, duration, event)
                if cand_ll >= ll:
                    scores, ll = cand, cand_ll
                    accepted = True
                else:
                    scale *= 0.5
            if not accepted:
                scale = 0.0  # skip a harmful round, keeping monotonicity
            self.trees_.append(tree)
            self.tree_scales_.append(float(scale))
            self.train_loglik_.append(ll)

        assert all(b >= a - 1e-9 for a, b in zip(self.train_loglik_, self.train_loglik_[1:]))
        self.n_features_in_ = X.shape[1]
        times, cumhaz = breslow_cumulative_hazard(scores, duration, event)
        self.baseline_times_ = times
        self.baseline_cumhaz_ = cumhaz
        return self

    def predict_risk(self, X):
        X = self._check_X(X)
        total = np.zeros(X.shape[0])
        for tree, scale in zip(self.trees_, self.tree_scales_):
            if scale != 0.0:
                total += scale * tree.predict(X)
        return total

    def cumulative_hazard(self, X, times):
        h0 = step_function_eval(self.baseline_times_, self.baseline_cumhaz_,
                                np.asarray(times, float), initial=0.0)
        return np.exp(self.predict_risk(X))[:, None] * h0[None, :]

    def predict_survival(self, X, times):
        return np.exp(-self.cumulative_hazard(X, times))

    def _get_state(self):
        return {
            "params": self.get_params(),
            "n_features_in": int(self.n_features_in_),
            "trees": [t.to_dict() for t in self.trees_],
            "tree_scales": self.tree_scales_,
            "train_loglik": [float(v) for v in self.train_loglik_],
            "baseline_times": self.baseline_times_.tolist(),
            "baseline_cumhaz": self.baseline_cumhaz_.tolist(),
        }

    @classmethod
    def _from_state(cls, state):
        model = cls(**state["params"])
        model.n_features_in_ = state["n_features_in"]
        model.trees_ = [
            _FrozenTree(t["feature"], t["threshold"], t["left"], t["right"], t["value"])
            for t in state["trees"]
        ]
        model.tree_scales_ = state["tree_scales"]
        model.train_loglik_ = state["train_loglik"]
        model.baseline_times_ = np.array(state["baseline_times"])
        model.baseline_cumhaz_ = np.array(state["baseline_cumhaz"])
        return model
