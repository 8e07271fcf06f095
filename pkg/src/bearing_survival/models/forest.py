"""Random survival forest with log-rank splitting and Nelson-Aalen leaves.

Each tree is grown on a bootstrap sample; at every node a random subset of
features is scanned for the split that maximizes the log-rank statistic
between the two children (or, with split_rule="conservation", the separation
between the children's Nelson-Aalen cumulative hazards). Terminal nodes
store Nelson-Aalen estimates and predictions average cumulative hazard over
trees before exponentiating, S = exp(-H).

The split scan is JIT-compiled; candidate thresholds are capped at
``max_cuts`` value boundaries per feature and the split statistic bins event
times to at most ``max_time_bins`` quantiles, which keeps large-node scans
linear. Small nodes are scanned exhaustively.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .._validation import check_design_matrix, check_survival_target
from ..exceptions import TooFewEvents
from .base import SurvivalModel, step_function_eval

SPLIT_RULES = ("logrank", "conservation")


@njit(cache=True)
def _best_split(V, rank, is_event, m, min_leaf, max_cuts, rule):
    """Best (feature, threshold, score) over the candidate cuts of V.

    ``rank[i]`` is the number of event-time bins <= record i's (adjusted)
    time, so record i is at risk in bin j iff rank[i] >= j + 1; events sit
    in bin rank[i] - 1. Returns feature -1 when no valid split exists.
    """
    n, p = V.shape

    # node totals per bin
    cnt_tot = np.zeros(m + 1, np.float64)
    d_tot = np.zeros(m, np.float64)
    ev_total = 0.0
    for i in range(n):
        cnt_tot[rank[i]] += 1.0
        if is_event[i] == 1:
            d_tot[rank[i] - 1] += 1.0
            ev_total += 1.0
    n_tot = np.zeros(m, np.float64)
    acc = 0.0
    for j in range(m, 0, -1):
        acc += cnt_tot[j]
        n_tot[j - 1] = acc

    best_feat = -1
    best_thr = 0.0
    best_score = -1.0

    cnt_left = np.zeros(m + 1, np.float64)
    d_left = np.zeros(m, np.float64)
    for f in range(p):
        v = V[:, f].copy()
        order = np.argsort(v, kind="mergesort")

        # boundaries between distinct sorted values
        n_bound = 0
        for i in range(1, n):
            if v[order[i]] != v[order[i - 1]]:
                n_bound += 1
        if n_bound == 0:
            continue
        bounds = np.empty(n_bound, np.int64)
        k = 0
        for i in range(1, n):
            if v[order[i]] != v[order[i - 1]]:
                bounds[k] = i
                k += 1
        if n_bound > max_cuts:
            picked = np.empty(max_cuts, np.int64)
            for q in range(max_cuts):
                picked[q] = bounds[(q + 1) * n_bound // (max_cuts + 1)]
            bounds = picked

        cnt_left[:] = 0.0
        d_left[:] = 0.0
        ev_left = 0.0
        pos = 0
        for bi in range(bounds.shape[0]):
            cut = bounds[bi]
            while pos < cut:
                i = order[pos]
                cnt_left[rank[i]] += 1.0
                if is_event[i] == 1:
                    d_left[rank[i] - 1] += 1.0
                    ev_left += 1.0
                pos += 1
            n_left = float(cut)
            n_right = float(n - cut)
            if n_left < min_leaf or n_right < min_leaf:
                continue
            if ev_left < 1.0 or (ev_total - ev_left) < 1.0:
                continue

            if rule == 0:  # log-rank
                num = 0.0
                var = 0.0
                suf = 0.0
                for j in range(m - 1, -1, -1):
                    suf += cnt_left[j + 1]
                    dj = d_tot[j]
                    nj = n_tot[j]
                    if dj > 0.0 and nj > 1.0:
                        frac = suf / nj
                        num += d_left[j] - dj * frac
                        var += dj * frac * (1.0 - frac) * (nj - dj) / (nj - 1.0)
                score = num * num / var if var > 0.0 else -1.0
            else:  # Nelson-Aalen separation between children
                sufl = 0.0
                hl = 0.0
                hr = 0.0
                score = 0.0
                for j in range(m - 1, -1, -1):
                    sufl += cnt_left[j + 1]
                    nl = sufl
                    nr = n_tot[j] - sufl
                    if nl > 0.0:
                        hl += d_left[j] / nl
                    if nr > 0.0:
                        hr += (d_tot[j] - d_left[j]) / nr
                    score += abs(hl - hr)
                if m > 0:
                    score /= m

            if score > best_score:
                best_score = score
                best_feat = f
                thr_lo = v[order[cut - 1]]
                thr_hi = v[order[cut]]
                best_thr = 0.5 * (thr_lo + thr_hi)
                if not (thr_lo < best_thr):  # midpoint underflowed to thr_lo
                    best_thr = thr_lo
    return best_feat, best_thr, best_score


def _event_bins(duration, event, max_time_bins):
    """Bin ranks for the split statistic, coarsening event times if needed.

    Event times are rounded up to the selected grid so an event stays at
    risk in its own bin; censored times keep their exact position.
    """
    ev_times = np.unique(duration[event == 1])
    if ev_times.size > max_time_bins:
        q = np.linspace(0.0, 1.0, max_time_bins)
        grid = np.unique(np.quantile(ev_times, q, method="higher"))
    else:
        grid = ev_times
    adjusted = duration.copy()
    is_ev = event == 1
    idx = np.searchsorted(grid, duration[is_ev], side="left")
    adjusted[is_ev] = grid[np.minimum(idx, grid.size - 1)]
    rank = np.searchsorted(grid, adjusted, side="right")
    return rank.astype(np.int64), grid.size


class _Tree:
    """Flat-array survival tree."""

    __slots__ = ("feature", "threshold", "left", "right",
                 "leaf_times", "leaf_cumhaz")

    def __init__(self):
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.leaf_times = []
        self.leaf_cumhaz = []

    def add_leaf(self, times, cumhaz):
        node = len(self.feature)
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.leaf_times.append(times)
        self.leaf_cumhaz.append(cumhaz)
        return node

    def add_internal(self, feature, threshold):
        node = len(self.feature)
        self.feature.append(feature)
        self.threshold.append(threshold)
        self.left.append(-1)
        self.right.append(-1)
        self.leaf_times.append(None)
        self.leaf_cumhaz.append(None)
        return node

    def finalize(self):
        self.feature = np.asarray(self.feature, dtype=np.int64)
        self.threshold = np.asarray(self.threshold, dtype=np.float64)
        self.left = np.asarray(self.left, dtype=np.int64)
        self.right = np.asarray(self.right, dtype=np.int64)

    def apply(self, X):
        """Leaf index for every row of X."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                return node
            rows = np.flatnonzero(active)
            go_left = X[rows, feat[rows]] <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])


def _node_nelson_aalen(duration, event):
    order = np.argsort(duration, kind="stable")
    t = duration[order]
    e = event[order]
    times, first = np.unique(t, return_index=True)
    at_risk = t.size - first
    d = np.add.reduceat(e, first) if t.size else np.array([])
    keep = d > 0
    return times[keep], np.cumsum(d[keep] / at_risk[keep])


class RandomSurvivalForest(SurvivalModel):
    """Bootstrap ensemble of log-rank survival trees."""

    def __init__(self, n_trees: int = 100, max_depth: int | None = None,
                 min_leaf: int = 3, mtry: int | None = None,
                 split_rule: str = "logrank", seed: int = 0,
                 max_cuts: int = 32, max_time_bins: int = 64):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.mtry = mtry
        self.split_rule = split_rule
        self.seed = seed
        self.max_cuts = max_cuts
        self.max_time_bins = max_time_bins

    def fit(self, X, duration, event):
        duration, event = check_survival_target(duration, event)
        X = check_design_matrix(X, duration)
        if self.n_trees < 1:
            raise ValueError("n_trees must be at least 1")
        if self.min_leaf < 2:
            raise ValueError("min_leaf must be at least 2")
        if self.split_rule not in SPLIT_RULES:
            raise ValueError(f"split_rule must be one of {SPLIT_RULES}")
        if event.sum() < 1:
            raise TooFewEvents("need at least one observed event to grow trees")

        n, d = X.shape
        mtry = self.mtry if self.mtry is not None else max(1, int(np.ceil(np.sqrt(d))))
        mtry = min(mtry, d)
        rule_code = SPLIT_RULES.index(self.split_rule)
        depth_cap = np.inf if self.max_depth is None else self.max_depth

        self.event_times_ = np.unique(duration[event == 1])
        streams = np.random.SeedSequence(self.seed).spawn(self.n_trees)
        self.trees_ = []
        for ss in streams:
            rng = np.random.default_rng(ss)
            boot = rng.integers(0, n, size=n)
            self.trees_.append(self._grow_tree(
                X[boot], duration[boot], event[boot], rng, mtry, rule_code, depth_cap))
        self.n_features_in_ = d
        return self

    def _grow_tree(self, X, duration, event, rng, mtry, rule_code, depth_cap):
        tree = _Tree()
        d = X.shape[1]
        # stack entries: (row indices, depth, parent node, is_left_child)
        stack = [(np.arange(X.shape[0]), 0, -1, False)]
        while stack:
            rows, depth, parent, is_left = stack.pop()
            node = self._try_split(tree, X, duration, event, rows, depth,
                                   rng, mtry, rule_code, depth_cap, d)
            if parent >= 0:
                if is_left:
                    tree.left[parent] = node
                else:
                    tree.right[parent] = node
            if tree.feature[node] >= 0:
                v = X[rows, tree.feature[node]]
                mask = v <= tree.threshold[node]
                stack.append((rows[mask], depth + 1, node, True))
                stack.append((rows[~mask], depth + 1, node, False))
        tree.finalize()
        return tree

    def _try_split(self, tree, X, duration, event, rows, depth, rng, mtry,
                   rule_code, depth_cap, d):
        t = duration[rows]
        e = event[rows]
        splittable = (depth < depth_cap and rows.size >= 2 * self.min_leaf
                      and e.sum() >= 2)
        if splittable:
            feats = np.sort(rng.choice(d, size=mtry, replace=False))
            rank, m = _event_bins(t, e, self.max_time_bins)
            f_local, thr, score = _best_split(
                np.ascontiguousarray(X[np.ix_(rows, feats)]),
                rank, e.astype(np.int64), m,
                np.int64(self.min_leaf), np.int64(self.max_cuts),
                np.int64(rule_code))
            if f_local >= 0 and score > 0.0:
                return tree.add_internal(int(feats[f_local]), float(thr))
        times, cumhaz = _node_nelson_aalen(t, e)
        return tree.add_leaf(times, cumhaz)

    def cumulative_hazard(self, X, times):
        """Ensemble-averaged Nelson-Aalen cumulative hazard."""
        X = self._check_X(X)
        times = np.asarray(times, dtype=np.float64)
        total = np.zeros((X.shape[0], times.size))
        for tree in self.trees_:
            leaves = tree.apply(X)
            for leaf in np.unique(leaves):
                rows = leaves == leaf
                total[rows] += step_function_eval(
                    tree.leaf_times[leaf], tree.leaf_cumhaz[leaf], times, initial=0.0)
        return total / len(self.trees_)

    def predict_survival(self, X, times):
        return np.exp(-self.cumulative_hazard(X, times))

    def predict_risk(self, X):
        """Ensemble mortality: cumulative hazard summed over the event grid."""
        return self.cumulative_hazard(X, self.event_times_).sum(axis=1)

    def _get_state(self):
        trees = []
        for tree in self.trees_:
            trees.append({
                "feature": tree.feature.tolist(),
                "threshold": tree.threshold.tolist(),
                "left": tree.left.tolist(),
                "right": tree.right.tolist(),
                "leaf_times": [None if t is None else np.asarray(t).tolist()
                               for t in tree.leaf_times],
                "leaf_cumhaz": [None if h is None else np.asarray(h).tolist()
                                for h in tree.leaf_cumhaz],
            })
        return {
            "params": self.get_params(),
            "n_features_in": int(self.n_features_in_),
            "event_times": self.event_times_.tolist(),
            "trees": trees,
        }

    @classmethod
    def _from_state(cls, state):
        model = cls(**state["params"])
        model.n_features_in_ = state["n_features_in"]
        model.event_times_ = np.array(state["event_times"])
        model.trees_ = []
        for td in state["trees"]:
            tree = _Tree()
            tree.feature = td["feature"]
            tree.threshold = td["threshold"]
            tree.left = td["left"]
            tree.right = td["right"]
            tree.leaf_times = [None if t is None else np.array(t) for t in td["leaf_times"]]
            tree.leaf_cumhaz = [None if h is None else np.array(h) for h in td["leaf_cumhaz"]]
            tree.finalize()
            model.trees_.append(tree)
        return model
