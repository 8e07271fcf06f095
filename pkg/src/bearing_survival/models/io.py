"""Versioned JSON serialization for fitted models.

Floats round-trip exactly through json (repr-based), so a saved and
reloaded model reproduces its predictions bit for bit.
"""
from __future__ import annotations

import json

from .boosting import GradientBoostedCox
from .cox import CoxPH
from .forest import RandomSurvivalForest
from .nonparametric import KaplanMeierBaseline
from .weibull import WeibullAFT

FORMAT_NAME = "bearing-survival-model"
FORMAT_VERSION = 1

MODEL_KINDS = {
    "coxph": CoxPH,
    "weibull_aft": WeibullAFT,
    "rsf": RandomSurvivalForest,
    "coxboost": GradientBoostedCox,
    "km": KaplanMeierBaseline,
}

_KIND_OF = {cls: kind for kind, cls in MODEL_KINDS.items()}


def model_to_document(model) -> dict:
    kind = _KIND_OF.get(type(model))
    if kind is None:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": kind,
        "state": model._get_state(),
    }


def model_from_document(doc: dict):
    if doc.get("format") != FORMAT_NAME:
        raise ValueError("not a bearing-survival model document")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model document version {doc.get('version')}")
    cls = MODEL_KINDS[doc["kind"]]
    return cls._from_state(doc["state"])


def save_model(model, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_document(model), fh)


def load_model(path):
    with open(path) as fh:
        return model_from_document(json.load(fh))
