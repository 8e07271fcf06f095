"""Cross-validated random hyperparameter search and benchmark reporting.

Folds are grouped by root bearing id so augmented records from one bearing
never straddle a fold boundary; configurations are sampled with a seeded
generator and scored by the mean time-dependent concordance on the
validation folds. The benchmark tunes, refits on the whole training split
(timing the final fit only) and evaluates on held-out bearings.
"""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dataset import SurvivalDataset, root_bearing_id
from .exceptions import AllConfigurationsFailed, BearingSurvivalError, OverlappingSplit
from .metrics import EvaluationReport, antolini_ci, default_ibs_grid, harrell_ci, integrated_brier
from .models import MODEL_KINDS

DEFAULT_MODELS = ("coxph", "rsf", "coxboost", "weibull_aft", "km")

_SEEDED_KINDS = ("rsf", "coxboost")


@dataclass
class SearchSpace:
    """Per-parameter candidate values (lists) or bounded intervals (tuples)."""

    params: dict = field(default_factory=dict)
    n_iterations: int = 10
    n_folds: int = 5
    seed: int = 0


def default_search_space(kind: str, seed: int = 0) -> SearchSpace:
    """The documented, implementer-chosen search ranges per model kind."""
    grids = {
        "coxph": {"max_iter": [50, 100, 200], "tol": [1e-5, 1e-7, 1e-9]},
        "rsf": {"n_trees": [50, 100, 200], "max_depth": [3, 5, 7, None],
                "split_rule": ["logrank"]},
        "coxboost": {"learning_rate": [0.05, 0.1, 0.3], "max_depth": [1, 2, 3],
                     "n_rounds": [100, 200]},
        "weibull_aft": {"penalizer": [0.0, 0.01, 0.1, 1.0]},
        "km": {},
    }
    if kind not in grids:
        raise ValueError(f"unknown model kind {kind!r}")
    return SearchSpace(params=grids[kind], seed=seed)


def make_model(kind: str, params: dict, seed: int = 0):
    """Instantiate a model kind with hyperparameters and a derived seed."""
    cls = MODEL_KINDS[kind]
    kwargs = dict(params)
    if kind in _SEEDED_KINDS:
        kwargs.setdefault("seed", seed)
    return cls(**kwargs)


def sample_configurations(space: SearchSpace, rng) -> list[dict]:
    """Draw n_iterations configurations, deduplicated in sampling order."""
    configs = []
    for _ in range(space.n_iterations):
        config = {}
        for name, choices in space.params.items():
            if isinstance(choices, tuple) and len(choices) == 2 \
                    and all(isinstance(c, (int, float)) for c in choices):
                config[name] = float(rng.uniform(choices[0], choices[1]))
            else:
                config[name] = choices[int(rng.integers(len(choices)))]
        if config not in configs:
            configs.append(config)
    return configs


def grouped_folds(sources, n_folds: int, rng) -> np.ndarray:
    """Fold assignment per record, grouping by root bearing id.

    Falls back to record-level folds (with a warning) when there are fewer
    distinct bearings than folds.
    """
    roots = np.array([root_bearing_id(s) for s in sources])
    unique_roots = sorted(set(roots))
    folds = np.empty(len(roots), dtype=np.int64)
    if len(unique_roots) >= n_folds:
        order = rng.permutation(len(unique_roots))
        fold_of_root = {unique_roots[g]: i % n_folds for i, g in enumerate(order)}
        for i, root in enumerate(roots):
            folds[i] = fold_of_root[root]
    else:
        warnings.warn(
            f"only {len(unique_roots)} distinct bearings for {n_folds} folds; "
            "falling back to record-level folds",
            stacklevel=2,
        )
        idx = rng.permutation(len(roots))
        for fold, chunk in enumerate(np.array_split(idx, n_folds)):
            folds[chunk] = fold
    return folds


@dataclass
class SearchResult:
    best_params: dict
    best_score: float
    cv_table: list[dict]


def _fold_score(model, X_tr, d_tr, e_tr, X_va, d_va, e_va) -> float:
    model.fit(X_tr, d_tr, e_tr)
    grid = np.unique(d_va[e_va == 1])
    if grid.size == 0:
        return float("nan")
    surv = model.predict_survival(X_va, grid)
    return antolini_ci(d_va, e_va, surv, grid)


def random_search(model_kind: str, train: SurvivalDataset,
                  space: SearchSpace | None = None) -> SearchResult:
    """Seeded random search scored by mean validation Antolini concordance."""
    if space is None:
        space = default_search_space(model_kind)
    rng = np.random.default_rng(space.seed)
    configs = sample_configurations(space, rng)

    X = train.X
    duration = train.duration
    event = train.event
    folds = grouped_folds(train.source, space.n_folds, rng)

    cv_table = []
    mean_scores = []
    for ci, config in enumerate(configs):
        fold_scores = []
        for fold in range(space.n_folds):
            va = folds == fold
            tr = ~va
            if not va.any() or not tr.any():
                fold_scores.append(float("nan"))
                continue
            try:
                score = _fold_score(make_model(model_kind, config, seed=space.seed),
                                    X[tr], duration[tr], event[tr],
                                    X[va], duration[va], event[va])
            except (BearingSurvivalError, ValueError):
                score = float("nan")
            fold_scores.append(score)
            cv_table.append({"config": ci, "params": dict(config),
                             "fold": fold, "antolini_ci": score})
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            mean_scores.append(float(np.nanmean(fold_scores)))

    valid = [s for s in mean_scores if not np.isnan(s)]
    if not valid:
        raise AllConfigurationsFailed(
            f"none of the {len(configs)} sampled configurations could be scored"
        )
    best = int(np.nanargmax(mean_scores))
    return SearchResult(best_params=configs[best], best_score=mean_scores[best],
                        cv_table=cv_table)


@dataclass
class BenchmarkRow:
    dataset: str
    model: str
    report: EvaluationReport | None = None
    error: str | None = None
    best_params: dict | None = None
    fitted: object | None = None


def _audit_leakage(train: SurvivalDataset, test: SurvivalDataset) -> None:
    train_roots = {root_bearing_id(s) for s in train.source}
    test_roots = {root_bearing_id(s) for s in test.source}
    shared = train_roots & test_roots
    if shared:
        raise OverlappingSplit(f"bearings appear in train and test: {sorted(shared)}")


def evaluate_model(model, model_name, train: SurvivalDataset, test: SurvivalDataset,
                   train_seconds: float) -> EvaluationReport:
    """Score a fitted model on the held-out split."""
    d_te, e_te = test.duration, test.event
    risk = model.predict_risk(test.X)
    ci = harrell_ci(d_te, e_te, risk)

    grid_td = np.unique(d_te[e_te == 1])
    ci_td = antolini_ci(d_te, e_te, model.predict_survival(test.X, grid_td), grid_td)

    grid_ibs = default_ibs_grid(d_te)
    ibs = integrated_brier(train.duration, train.event, d_te, e_te,
                           model.predict_survival(test.X, grid_ibs), grid_ibs)

    n_pairs = sum(
        int(np.count_nonzero(d_te > d_te[i])) for i in range(d_te.size) if e_te[i] == 1
    )
    return EvaluationReport(model=model_name, harrell_ci=ci, antolini_ci=ci_td,
                            ibs=ibs, train_seconds=train_seconds,
                            n_comparable_pairs=n_pairs)


def run_benchmark(datasets: dict, models=DEFAULT_MODELS, seed: int = 0,
                  spaces: dict | None = None, timing_repeats: int = 3) -> list[BenchmarkRow]:
    """Tune, fit and evaluate every (dataset, model) cell.

    ``datasets`` maps a name to a (train, test) pair of SurvivalDataset.
    A failing cell is reported in its row without aborting the others.
    The final fit is deterministic, so T_train is the minimum wall-clock
    over ``timing_repeats`` identical single-threaded fits, which keeps the
    fast sub-millisecond fits comparable.
    """
    rows = []
    for ds_name, (train, test) in datasets.items():
        _audit_leakage(train, test)
        X, duration, event = train.X, train.duration, train.event
        for model_name in models:
            row = BenchmarkRow(dataset=ds_name, model=model_name)
            try:
                space = (spaces or {}).get(model_name) or default_search_space(model_name, seed=seed)
                if space.params:
                    search = random_search(model_name, train, space)
                    row.best_params = search.best_params
                else:
                    row.best_params = {}
                model = make_model(model_name, row.best_params, seed=seed)
                start = time.perf_counter()
                model.fit(X, duration, event)
                train_seconds = time.perf_counter() - start
                for _ in range(max(0, timing_repeats - 1)):
                    repeat = make_model(model_name, row.best_params, seed=seed)
                    start = time.perf_counter()
                    repeat.fit(X, duration, event)
                    train_seconds = min(train_seconds, time.perf_counter() - start)
                row.report = evaluate_model(model, model_name, train, test, train_seconds)
                row.fitted = model
            except (BearingSurvivalError, ValueError) as exc:
                row.error = f"{type(exc).__name__}: {exc}"
            rows.append(row)
    return rows
