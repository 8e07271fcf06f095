import numpy as np
import pytest

from bearing_survival.dataset import SurvivalDataset, SurvivalRecord


def linear_cohort(n, beta, baseline_lambda=0.1, censor_frac=0.2, seed=0):
    """Exponential proportional-hazards sample with uniform censoring."""
    rng = np.random.default_rng(seed)
    beta = np.asarray(beta, dtype=float)
    X = rng.normal(size=(n, beta.size))
    T = rng.exponential(1.0 / (baseline_lambda * np.exp(X @ beta)))
    E = np.ones(n, dtype=int)
    censored = rng.uniform(size=n) < censor_frac
    T = np.where(censored, T * rng.uniform(size=n), T)
    E[censored] = 0
    return X, np.maximum(T, 1e-9), E


def as_dataset(X, T, E, n_bearings=10):
    records = [
        SurvivalRecord(covariates=X[i], duration=float(T[i]), event=int(E[i]),
                       source_bearing=f"b{i % n_bearings}")
        for i in range(len(T))
    ]
    return SurvivalDataset(records=records,
                           censoring_rate=float(np.mean(E == 0)),
                           feature_names=tuple(f"feature_{j + 1}" for j in range(X.shape[1])))


@pytest.fixture
def small_cohort():
    X, T, E = linear_cohort(200, [0.9, -0.6, 0.0], seed=7)
    return X, T, E
