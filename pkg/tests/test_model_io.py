import json

import numpy as np
import pytest

from bearing_survival.models import (
    CoxPH,
    GradientBoostedCox,
    KaplanMeierBaseline,
    RandomSurvivalForest,
    WeibullAFT,
    load_model,
    model_to_document,
    save_model,
)
from tests.conftest import linear_cohort

FITTED = [
    ("coxph", lambda: CoxPH()),
    ("weibull_aft", lambda: WeibullAFT(penalizer=0.01)),
    ("rsf", lambda: RandomSurvivalForest(n_trees=8, max_depth=3, seed=5)),
    ("coxboost", lambda: GradientBoostedCox(n_rounds=15, learning_rate=0.2, seed=5)),
    ("km", lambda: KaplanMeierBaseline()),
]


@pytest.mark.parametrize("kind,factory", FITTED, ids=[k for k, _ in FITTED])
def test_round_trip_predictions_bit_exact(tmp_path, kind, factory):
    X, T, E = linear_cohort(120, [0.8, -0.5], seed=2)
    model = factory().fit(X, T, E)
    path = tmp_path / f"{kind}.json"
    save_model(model, path)
    restored = load_model(path)

    times = np.linspace(0.2, float(T.max()), 37)
    np.testing.assert_array_equal(model.predict_risk(X), restored.predict_risk(X))
    np.testing.assert_array_equal(model.predict_survival(X[:9], times),
                                  restored.predict_survival(X[:9], times))


def test_document_shape(tmp_path):
    X, T, E = linear_cohort(60, [0.5], seed=3)
    doc = model_to_document(CoxPH().fit(X, T, E))
    assert doc["format"] == "bearing-survival-model"
    assert doc["version"] == 1
    assert doc["kind"] == "coxph"
    assert json.loads(json.dumps(doc)) == doc


def test_unknown_document_rejected(tmp_path):
    path = tmp_path / "bogus.json"
    path.write_text(json.dumps({"format": "something-else", "version": 1}))
    with pytest.raises(ValueError):
        load_model(path)


def test_unknown_version_rejected(tmp_path):
    path = tmp_path / "vnext.json"
    path.write_text(json.dumps({"format": "bearing-survival-model", "version": 99,
                                "kind": "coxph", "state": {}}))
    with pytest.raises(ValueError):
        load_model(path)
