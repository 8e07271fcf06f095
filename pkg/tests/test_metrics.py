import numpy as np
import pytest

from bearing_survival.exceptions import (
    DegenerateCensoringKmWarning,
    GridTooCoarse,
    NoComparablePairs,
)
from bearing_survival.metrics import (
    EvaluationReport,
    antolini_ci,
    brier_scores,
    default_ibs_grid,
    harrell_ci,
    integrated_brier,
    write_report_csv,
)
from bearing_survival.models import CoxPH, kaplan_meier
from tests.conftest import linear_cohort


class TestHarrell:
    def test_perfect_ranking(self):
        t = np.array([3.0, 1.0, 2.0, 5.0])
        e = np.ones(4, dtype=int)
        assert harrell_ci(t, e, -t) == 1.0
        assert harrell_ci(t, e, t) == 0.0

    def test_hand_case_two_thirds(self):
        ci = harrell_ci([1.0, 2.0, 3.0], [1, 1, 0], [3.0, 1.0, 2.0])
        assert ci == pytest.approx(2 / 3)

    def test_tied_scores_count_half(self):
        ci = harrell_ci([1.0, 2.0], [1, 1], [1.0, 1.0])
        assert ci == 0.5

    def test_no_comparable_pairs(self):
        with pytest.raises(NoComparablePairs):
            harrell_ci([1.0, 2.0], [0, 1], [1.0, 2.0])

    def test_complement_symmetry_without_ties(self):
        rng = np.random.default_rng(0)
        t = rng.uniform(1, 10, 30)
        e = (rng.uniform(size=30) < 0.7).astype(int)
        e[np.argmin(t)] = 1
        risk = rng.normal(size=30)
        assert harrell_ci(t, e, risk) + harrell_ci(t, e, -risk) == pytest.approx(1.0)

    def test_permutation_invariance(self):
        t = np.array([1.0, 4.0, 2.0, 8.0, 3.0])
        e = np.array([1, 1, 0, 1, 1])
        r = np.array([5.0, 1.0, 2.0, 0.0, 3.0])
        perm = np.array([3, 0, 4, 1, 2])
        assert harrell_ci(t, e, r) == harrell_ci(t[perm], e[perm], r[perm])


def _brute_force_antolini(t, e, S, grid):
    """Direct pair enumeration, independent of the library implementation."""
    def s_at(i, when):
        idx = np.searchsorted(grid, when, side="right") - 1
        return 1.0 if idx < 0 else S[i, idx]

    num, den = 0.0, 0
    n = len(t)
    for i in range(n):
        if e[i] != 1:
            continue
        for j in range(n):
            if t[i] >= t[j]:
                continue
            den += 1
            si, sj = s_at(i, t[i]), s_at(j, t[i])
            if si < sj:
                num += 1.0
            elif si == sj:
                num += 0.5
    return num / den


class TestAntolini:
    def test_matches_harrell_for_noncrossing_curves(self):
        X, T, E = linear_cohort(120, [0.9, -0.4], seed=4)
        model = CoxPH().fit(X, T, E)
        grid = np.unique(T[E == 1])
        S = model.predict_survival(X, grid)
        td = antolini_ci(T, E, S, grid)
        h = harrell_ci(T, E, model.predict_risk(X))
        assert td == pytest.approx(h, abs=1e-9)

    def test_identical_curves_give_half(self):
        t = np.array([1.0, 2.0, 3.0, 4.0])
        e = np.ones(4, dtype=int)
        grid = t.copy()
        S = np.tile(np.array([0.9, 0.7, 0.5, 0.2]), (4, 1))
        assert antolini_ci(t, e, S, grid) == 0.5

    def test_crossing_pair_matches_brute_force(self):
        t = np.array([1.0, 2.0, 3.0])
        e = np.array([1, 1, 1])
        grid = np.array([1.0, 2.0, 3.0])
        # record 0's curve starts above record 1's and crosses below it
        # between t=1 and t=2, so the (0, 1) pair is discordant at t=1
        S = np.array([
            [0.9, 0.2, 0.1],
            [0.6, 0.5, 0.4],
            [0.95, 0.9, 0.85],
        ])
        expected = _brute_force_antolini(t, e, S, grid)
        assert antolini_ci(t, e, S, grid) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx((0.0 + 1.0 + 1.0) / 3)

    def test_grid_must_cover_event_times(self):
        t = np.array([1.0, 5.0])
        e = np.array([1, 1])
        grid = np.array([1.0, 2.0])
        with pytest.raises(GridTooCoarse):
            antolini_ci(t, e, np.full((2, 2), 0.5), grid)


def _direct_graf(train_t, train_e, t, e, S, grid):
    """Loop-based Graf formula with its own censoring Kaplan-Meier."""
    km = kaplan_meier(np.asarray(train_t, float), 1 - np.asarray(train_e, int))

    def g_at(when):
        value = 1.0
        for tt, ss in zip(km.times, km.survival):
            if tt <= when:
                value = ss
        return value

    scores = []
    for tk in grid:
        total = 0.0
        for i in range(len(t)):
            s = S[i, list(grid).index(tk)]
            if t[i] <= tk and e[i] == 1:
                total += s**2 / g_at(t[i])
            elif t[i] > tk:
                total += (1 - s) ** 2 / g_at(tk)
        scores.append(total / len(t))
    return np.trapezoid(scores, grid) / (grid[-1] - grid[0])


class TestIntegratedBrier:
    def test_constant_half_predictor(self):
        t = np.array([1.0, 2.0, 3.0, 4.0])
        e = np.ones(4, dtype=int)
        grid = np.array([0.5, 1.5, 2.5, 3.5])
        S = np.full((4, 4), 0.5)
        ibs = integrated_brier(t, e, t, e, S, grid)
        assert ibs == 0.25

    def test_oracle_step_predictor_is_zero(self):
        t = np.array([1.0, 2.0, 3.0, 4.0])
        e = np.ones(4, dtype=int)
        grid = np.array([0.5, 1.5, 2.5, 3.5])
        S = (grid[None, :] < t[:, None]).astype(float)
        assert integrated_brier(t, e, t, e, S, grid) == 0.0

    def test_hand_case_with_censoring_matches_direct_graf(self):
        train_t = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
        train_e = np.array([1, 0, 1, 0, 1, 1])
        t = np.array([1.5, 2.5, 3.5, 4.5])
        e = np.array([1, 0, 1, 1])
        grid = np.array([1.0, 2.0, 3.0, 4.0])
        rng = np.random.default_rng(1)
        S = np.sort(rng.uniform(0.1, 0.99, size=(4, 4)))[:, ::-1].copy()
        expected = _direct_graf(train_t, train_e, t, e, S, grid)
        got = integrated_brier(train_t, train_e, t, e, S, grid)
        assert got == pytest.approx(expected, rel=1e-12)

    def test_km_prediction_beats_constant_half(self):
        X, T, E = linear_cohort(150, [0.0], seed=9)
        km = kaplan_meier(T, E)
        grid = default_ibs_grid(T)
        S_km = np.tile(km.at(grid), (len(T), 1))
        S_half = np.full_like(S_km, 0.5)
        ibs_km = integrated_brier(T, E, T, E, S_km, grid)
        ibs_half = integrated_brier(T, E, T, E, S_half, grid)
        assert ibs_km <= ibs_half

    def test_degenerate_censoring_truncates_with_warning(self):
        # largest training record is censored, so the censoring KM hits zero
        train_t = np.array([1.0, 2.0, 3.0])
        train_e = np.array([1, 1, 0])
        t = np.array([1.5, 2.5])
        e = np.array([1, 1])
        grid = np.array([1.0, 2.0, 3.5])
        S = np.full((2, 3), 0.5)
        with pytest.warns(DegenerateCensoringKmWarning):
            out_grid, scores = brier_scores(train_t, train_e, t, e, S, grid)
        assert out_grid.size == 2

    def test_default_grid_within_quantile(self):
        t = np.linspace(1, 100, 200)
        grid = default_ibs_grid(t)
        assert grid.size == 100
        assert grid[0] > 0
        assert grid[-1] == pytest.approx(np.quantile(t, 0.95))


class TestReportExport:
    def test_csv_columns(self, tmp_path):
        report = EvaluationReport(model="coxph", harrell_ci=0.7, antolini_ci=0.71,
                                  ibs=0.214, train_seconds=0.094, n_comparable_pairs=123)
        assert report.accuracy == pytest.approx(0.786)
        path = tmp_path / "report.csv"
        write_report_csv([report], path)
        lines = path.read_text().splitlines()
        assert lines[0] == "Model,T_train,CI,CI_td,IBS,Accuracy"
        assert lines[1].startswith("coxph,0.094,0.7")
