"""Evaluation metrics: concordance indices and the integrated Brier score.

A pair (i, j) is comparable when d_i < d_j and record i experienced the
event. Harrell's index ranks pairs by a scalar risk score; the
time-dependent variant compares the predicted survival probabilities at the
earlier failure time, which also rewards models whose curves cross. The
Brier score uses inverse-probability-of-censoring weights from a
Kaplan-Meier fit of the censoring distribution on training data, so the
test set never influences its own weights.
"""
from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_float_array, check_survival_target
from .exceptions import DegenerateCensoringKmWarning, GridTooCoarse, NoComparablePairs
from .models.base import step_function_eval
from .models.nonparametric import kaplan_meier


@dataclass
class EvaluationReport:
    """One Table-2-style row: model scores on a test set."""

    model: str
    harrell_ci: float
    antolini_ci: float
    ibs: float
    train_seconds: float
    n_comparable_pairs: int
    # 1 - IBS, a non-standard convenience reading of the Brier score
    accuracy: float = field(init=False)

    def __post_init__(self):
        self.accuracy = 1.0 - self.ibs


def _comparable_pairs(duration, event):
    """Indices (i, j) with d_i < d_j and event_i = 1."""
    n = duration.size
    pairs_i = []
    pairs_j = []
    for i in range(n):
        if event[i] != 1:
            continue
        js = np.flatnonzero(duration > duration[i])
        pairs_i.append(np.full(js.size, i))
        pairs_j.append(js)
    if not pairs_i:
        return np.array([], dtype=int), np.array([], dtype=int)
    return np.concatenate(pairs_i), np.concatenate(pairs_j)


def harrell_ci(duration, event, risk_score) -> float:
    """Fraction of comparable pairs ranked correctly by the risk score.

    The shorter-lived record of a pair should carry the higher score; score
    ties contribute one half.
    """
    duration, event = check_survival_target(duration, event)
    risk = as_float_array(risk_score, "risk_score")
    ii, jj = _comparable_pairs(duration, event)
    if ii.size == 0:
        raise NoComparablePairs("no pair with d_i < d_j and event_i = 1")
    ri, rj = risk[ii], risk[jj]
    concordant = np.count_nonzero(ri > rj)
    ties = np.count_nonzero(ri == rj)
    return (concordant + 0.5 * ties) / ii.size


def antolini_ci(duration, event, survival_matrix, times) -> float:
    """Time-dependent concordance on predicted survival curves.

    A comparable pair (i, j) is concordant when S_i(d_i) < S_j(d_i); the
    matrix holds one curve per record sampled on the shared ``times`` grid.
    """
    duration, event = check_survival_target(duration, event)
    times = as_float_array(times, "times")
    S = as_float_array(survival_matrix, "survival_matrix", ndim=2)
    if S.shape != (duration.size, times.size):
        raise ValueError("survival_matrix must be n_records x n_times")
    event_times = duration[event == 1]
    if event_times.size and event_times.max() > times[-1]:
        raise GridTooCoarse("an observed event time lies beyond the grid")

    ii, jj = _comparable_pairs(duration, event)
    if ii.size == 0:
        raise NoComparablePairs("no pair with d_i < d_j and event_i = 1")
    # survival of both pair members at the earlier failure time d_i
    col = np.searchsorted(times, duration[ii], side="right") - 1
    si = np.where(col >= 0, S[ii, np.clip(col, 0, None)], 1.0)
    sj = np.where(col >= 0, S[jj, np.clip(col, 0, None)], 1.0)
    concordant = np.count_nonzero(si < sj)
    ties = np.count_nonzero(si == sj)
    return (concordant + 0.5 * ties) / ii.size


def censoring_km(train_duration, train_event):
    """Kaplan-Meier of the censoring distribution (events flipped)."""
    train_duration, train_event = check_survival_target(train_duration, train_event)
    return kaplan_meier(train_duration, 1 - train_event)


def brier_scores(train_duration, train_event, duration, event, survival_matrix, grid):
    """IPCW Brier score at every grid time; returns (grid, scores).

    The grid is truncated with a warning where the censoring survival
    reaches zero, since the weights are undefined there.
    """
    duration, event = check_survival_target(duration, event)
    grid = as_float_array(grid, "grid")
    S = as_float_array(survival_matrix, "survival_matrix", ndim=2)
    if S.shape != (duration.size, grid.size):
        raise ValueError("survival_matrix must be n_records x n_grid")

    g_curve = censoring_km(train_duration, train_event)
    g_at_grid = g_curve.at(grid)
    if np.any(g_at_grid <= 0):
        cutoff = int(np.argmax(g_at_grid <= 0))
        warnings.warn(
            "censoring KM reaches zero inside the grid; truncating to "
            f"{cutoff} of {grid.size} points",
            DegenerateCensoringKmWarning, stacklevel=2,
        )
        grid = grid[:cutoff]
        g_at_grid = g_at_grid[:cutoff]
        S = S[:, :cutoff]
        if grid.size == 0:
            raise ValueError("censoring KM is zero everywhere on the grid")
    g_at_event = g_curve.at(duration)

    had_event = (event == 1)[:, None] & (duration[:, None] <= grid[None, :])
    still_alive = duration[:, None] > grid[None, :]
    with np.errstate(divide="ignore"):
        w_event = np.where(g_at_event[:, None] > 0, 1.0 / g_at_event[:, None], 0.0)
    scores = (
        S**2 * had_event * w_event
        + (1.0 - S) ** 2 * still_alive / g_at_grid[None, :]
    ).mean(axis=0)
    return grid, scores


def integrated_brier(train_duration, train_event, duration, event,
                     survival_matrix, grid) -> float:
    """Trapezoidal average of the IPCW Brier score over the grid."""
    grid, scores = brier_scores(train_duration, train_event, duration, event,
                                survival_matrix, grid)
    if grid.size == 1:
        return float(scores[0])
    span = grid[-1] - grid[0]
    return float(np.trapezoid(scores, grid) / span)


def default_ibs_grid(test_duration, n_points: int = 100) -> np.ndarray:
    """Evenly spaced grid over (0, 95th percentile of test durations]."""
    horizon = float(np.quantile(np.asarray(test_duration, float), 0.95))
    return horizon * np.arange(1, n_points + 1) / n_points


def write_report_csv(reports, path) -> None:
    """Export rows as Model,T_train,CI,CI_td,IBS (plus the accuracy reading)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["Model", "T_train", "CI", "CI_td", "IBS", "Accuracy"])
        for r in reports:
            writer.writerow([r.model, f"{r.train_seconds:.3f}",
                             f"{r.harrell_ci:.6f}", f"{r.antolini_ci:.6f}",
                             f"{r.ibs:.6f}", f"{r.accuracy:.6f}"])


def write_report_json(reports, path) -> None:
    rows = [
        {
            "model": r.model,
            "t_train": round(r.train_seconds, 3),
            "ci": r.harrell_ci,
            "ci_td": r.antolini_ci,
            "ibs": r.ibs,
            "accuracy": r.accuracy,
            "n_comparable_pairs": r.n_comparable_pairs,
        }
        for r in reports
    ]
    with open(path, "w") as fh:
        json.dump(rows, fh, indent=2)
        fh.write("\n")
