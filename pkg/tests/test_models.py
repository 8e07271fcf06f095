import numpy as np
import pytest

from bearing_survival.exceptions import (
    DimensionMismatch,
    EmptyInput,
    MonotoneLikelihood,
    NoEvents,
)
from bearing_survival.models import (
    CoxPH,
    WeibullAFT,
    cox_partial_gradient,
    cox_partial_loglik,
    kaplan_meier,
    nelson_aalen,
    predict_survival,
    weibull_gradient,
)
from tests.conftest import linear_cohort


class TestKaplanMeier:
    def test_all_events_hand_case(self):
        curve = kaplan_meier([1.0, 2.0, 3.0], [1, 1, 1])
        np.testing.assert_allclose(curve.survival, [2 / 3, 1 / 3, 0.0])

    def test_censoring_hand_case(self):
        curve = kaplan_meier([2.0, 3.0, 5.0], [1, 0, 1])
        np.testing.assert_allclose(curve.times, [2.0, 3.0, 5.0])
        np.testing.assert_allclose(curve.survival, [2 / 3, 2 / 3, 0.0])

    def test_all_censored_flat(self):
        curve = kaplan_meier([1.0, 2.0, 3.0], [0, 0, 0])
        np.testing.assert_allclose(curve.survival, [1.0, 1.0, 1.0])

    def test_no_censoring_matches_empirical(self):
        rng = np.random.default_rng(5)
        t = rng.exponential(size=60)  # continuous, so no ties
        curve = kaplan_meier(t, np.ones(60, dtype=int))
        np.testing.assert_allclose(curve.survival, 1.0 - np.arange(1, 61) / 60.0, atol=1e-12)

    def test_greenwood_bands_bracket_estimate(self):
        t, e = linear_cohort(100, [0.0], seed=1)[1:]
        curve = kaplan_meier(t, e)
        assert np.all(curve.lower <= curve.survival + 1e-12)
        assert np.all(curve.upper >= curve.survival - 1e-12)
        assert np.all((curve.lower >= 0) & (curve.upper <= 1))

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            kaplan_meier([], [])

    def test_nelson_aalen_increments(self):
        times, cumhaz = nelson_aalen([1.0, 2.0, 3.0], [1, 1, 1])
        np.testing.assert_allclose(cumhaz, [1 / 3, 1 / 3 + 1 / 2, 1 / 3 + 1 / 2 + 1])


def _oracle_pll_single_covariate(beta_grid, x, t):
    """Independent Breslow partial log-likelihood for all-event 1-d data."""
    order = np.argsort(t)
    x = np.asarray(x, float)[order]
    values = []
    for beta in beta_grid:
        exp_bx = np.exp(beta * x)
        suffix = np.cumsum(exp_bx[::-1])[::-1]
        values.append(np.sum(beta * x - np.log(suffix)))
    return np.array(values)


class TestCoxPH:
    def test_gradient_matches_finite_differences(self):
        X, T, E = linear_cohort(80, [0.5, -0.3, 0.2, 0.0], seed=3)
        rng = np.random.default_rng(0)
        eps = 1e-5
        for _ in range(5):
            beta = rng.normal(scale=0.7, size=4)
            grad = cox_partial_gradient(beta, X, T, E)
            fd = np.array([
                (cox_partial_loglik(beta + eps * e, X, T, E)
                 - cox_partial_loglik(beta - eps * e, X, T, E)) / (2 * eps)
                for e in np.eye(4)
            ])
            rel = np.abs(grad - fd).max() / max(np.abs(fd).max(), 1e-12)
            assert rel < 1e-5

    def test_single_covariate_matches_grid_oracle(self):
        x = np.array([[1.0], [0.0], [1.0], [0.0]])
        t = np.array([1.0, 2.0, 3.0, 4.0])
        e = np.array([1, 1, 1, 1])
        model = CoxPH().fit(x, t, e)
        grid = np.arange(-5.0, 5.0 + 1e-9, 1e-4)
        oracle_beta = grid[np.argmax(_oracle_pll_single_covariate(grid, x[:, 0], t))]
        assert model.coef_[0] == pytest.approx(oracle_beta, abs=1e-3)

    def test_zero_covariate_gives_nelson_aalen_baseline(self):
        t = np.array([1.0, 2.0, 3.0, 4.0])
        e = np.array([1, 1, 0, 1])
        model = CoxPH().fit(np.zeros((4, 1)), t, e)
        assert model.coef_[0] == 0.0
        na_times, na_cumhaz = nelson_aalen(t, e)
        np.testing.assert_allclose(model.baseline_times_, na_times)
        np.testing.assert_allclose(model.baseline_cumhaz_, na_cumhaz, rtol=1e-12)

    def test_separation_detected(self):
        # perfectly separating covariate; the small scale keeps the exponent
        # terms alive until the coefficient escapes the divergence bound
        t = np.arange(1.0, 9.0)
        x = (-t / 1000.0).reshape(-1, 1)
        with pytest.raises(MonotoneLikelihood):
            CoxPH().fit(x, t, np.ones(8, dtype=int))

    def test_no_events(self):
        with pytest.raises(NoEvents):
            CoxPH().fit(np.zeros((3, 1)), [1.0, 2.0, 3.0], [0, 0, 0])

    def test_null_model_curve_equals_baseline(self):
        t = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        e = np.array([1, 1, 1, 0, 1])
        model = CoxPH().fit(np.zeros((5, 2)), t, e)
        times = np.array([0.5, 1.5, 3.5, 5.0])
        surv = model.predict_survival(np.array([[4.0, -2.0], [0.0, 0.0]]), times)
        np.testing.assert_allclose(surv[0], surv[1], rtol=1e-12)

    def test_higher_risk_lower_curve(self, small_cohort):
        X, T, E = small_cohort
        model = CoxPH().fit(X, T, E)
        lo, hi = np.argsort(model.predict_risk(X))[[0, -1]]
        times = np.linspace(0.1, np.quantile(T, 0.9), 30)
        s = model.predict_survival(X[[lo, hi]], times)
        assert np.all(s[0] >= s[1] - 1e-12)

    def test_risk_ranking_invariant_to_affine_covariate_transform(self, small_cohort):
        X, T, E = small_cohort
        X2 = X.copy()
        X2[:, 0] = 3.5 * X2[:, 0] - 40.0
        r1 = CoxPH().fit(X, T, E).predict_risk(X)
        r2 = CoxPH().fit(X2, T, E).predict_risk(X2)
        np.testing.assert_array_equal(np.argsort(r1), np.argsort(r2))

    def test_survival_curve_is_valid(self, small_cohort):
        X, T, E = small_cohort
        model = CoxPH().fit(X, T, E)
        curve = predict_survival(model, X[0], np.linspace(0.1, T.max(), 50))
        assert curve.survival[0] <= 1.0
        assert np.all(np.diff(curve.survival) <= 1e-12)

    def test_dimension_mismatch(self, small_cohort):
        X, T, E = small_cohort
        model = CoxPH().fit(X, T, E)
        with pytest.raises(DimensionMismatch):
            model.predict_risk(X[:, :2])


class TestWeibullAFT:
    def test_monte_carlo_recovery(self):
        shapes, scales = [], []
        for seed in range(3):
            rng = np.random.default_rng(seed)
            t = 10.0 * rng.weibull(2.0, size=2000)
            model = WeibullAFT().fit(np.empty((2000, 0)), t, np.ones(2000, dtype=int))
            shapes.append(model.shape_)
            scales.append(np.exp(model.intercept_))
        assert 1.85 <= np.mean(shapes) <= 2.15
        assert 9.5 <= np.mean(scales) <= 10.5

    def test_gradient_zero_at_optimum(self, small_cohort):
        X, T, E = small_cohort
        model = WeibullAFT().fit(X, T, E)
        params = np.concatenate(([np.log(model.shape_)], [model.intercept_], model.coef_))
        grad = weibull_gradient(params, X - model.train_mean_, T, E)
        assert np.abs(grad).max() < 1e-5

    def test_all_censored(self):
        with pytest.raises(NoEvents):
            WeibullAFT().fit(np.zeros((4, 1)), [1.0, 2.0, 3.0, 4.0], [0, 0, 0, 0])

    def test_exponential_special_case_k1(self):
        times = np.linspace(0.5, 20, 10)
        model = WeibullAFT(fixed_shape=1.0).fit(
            np.empty((50, 0)), np.linspace(1, 10, 50), np.ones(50, dtype=int))
        lam = np.exp(model.intercept_)
        surv = model.predict_survival(np.empty((1, 0)), times)[0]
        np.testing.assert_allclose(surv, np.exp(-times / lam), rtol=1e-9)

    def test_fixed_shape_recovers_exponential_regression_mle(self):
        # binary covariate, no censoring: group MLE scales are sample means
        rng = np.random.default_rng(12)
        x = np.repeat([0.0, 1.0], 400).reshape(-1, 1)
        t = np.where(x[:, 0] == 0, rng.exponential(5.0, 800), rng.exponential(2.0, 800))
        model = WeibullAFT(fixed_shape=1.0).fit(x, t, np.ones(800, dtype=int))
        m0 = t[x[:, 0] == 0].mean()
        m1 = t[x[:, 0] == 1].mean()
        assert model.coef_[0] == pytest.approx(np.log(m1 / m0), rel=1e-2, abs=1e-2)
        fitted_scales = np.exp(model._log_scale(np.array([[0.0], [1.0]])))
        assert fitted_scales[0] == pytest.approx(m0, rel=1e-2)
        assert fitted_scales[1] == pytest.approx(m1, rel=1e-2)

    def test_penalizer_shrinks_coefficients(self, small_cohort):
        X, T, E = small_cohort
        free = WeibullAFT(penalizer=0.0).fit(X, T, E)
        shrunk = WeibullAFT(penalizer=10.0).fit(X, T, E)
        assert np.linalg.norm(shrunk.coef_) < np.linalg.norm(free.coef_)

    def test_survival_in_unit_interval(self, small_cohort):
        X, T, E = small_cohort
        model = WeibullAFT().fit(X, T, E)
        s = model.predict_survival(X[:5], np.linspace(0.0, T.max(), 20))
        assert np.all((s >= 0) & (s <= 1))
        np.testing.assert_allclose(s[:, 0], 1.0)
