"""Right-censored survival estimators and their serialization."""
from __future__ import annotations

import numpy as np

from .base import SurvivalCurve, SurvivalModel, step_function_eval
from .boosting import GradientBoostedCox
from .cox import (
    CoxPH,
    breslow_cumulative_hazard,
    cox_partial_gradient,
    cox_partial_hessian,
    cox_partial_loglik,
)
from .forest import RandomSurvivalForest
from .io import MODEL_KINDS, load_model, model_from_document, model_to_document, save_model
from .nonparametric import KaplanMeierBaseline, kaplan_meier, nelson_aalen
from .weibull import WeibullAFT, weibull_gradient, weibull_loglik

__all__ = [
    "CoxPH",
    "GradientBoostedCox",
    "KaplanMeierBaseline",
    "MODEL_KINDS",
    "RandomSurvivalForest",
    "SurvivalCurve",
    "SurvivalModel",
    "WeibullAFT",
    "breslow_cumulative_hazard",
    "cox_partial_gradient",
    "cox_partial_hessian",
    "cox_partial_loglik",
    "kaplan_meier",
    "load_model",
    "model_from_document",
    "model_to_document",
    "nelson_aalen",
    "predict_survival",
    "save_model",
    "step_function_eval",
    "weibull_gradient",
    "weibull_loglik",
]


def predict_survival(model, x, times) -> SurvivalCurve:
    """Survival curve of a fitted model for one covariate vector."""
    times = np.asarray(times, dtype=np.float64)
    return model.predict_survival_curve(np.asarray(x, dtype=np.float64), times)
