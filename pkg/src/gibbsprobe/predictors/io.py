"""Versioned JSON serialization for trained predictors."""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import SpecError
from .base import Predictor
from .linear import LinearRegressionModel, LogisticRegressionModel
from .mlp import MlpModel
from .svm import KernelSvmModel
from .trees import DecisionTreeModel, RandomForestModel

FORMAT_VERSION = 1

_REGISTRY = {
    "linear-regression": LinearRegressionModel,
    "logistic-regression": LogisticRegressionModel,
    "mlp": MlpModel,
    "kernel-svm": KernelSvmModel,
    "decision-tree": DecisionTreeModel,
    "random-forest": RandomForestModel,
}


def predictor_to_json(model: Predictor) -> str:
    doc = {"format_version": FORMAT_VERSION, "model": model.to_config()}
    return json.dumps(doc, sort_keys=True)


def predictor_from_json(text: str) -> Predictor:
    doc = json.loads(text)
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise SpecError(f"unsupported model format version {version!r}")
    cfg = doc["model"]
    kind = cfg.get("kind")
    if kind not in _REGISTRY:
        raise SpecError(f"unknown model kind {kind!r}")
    return _REGISTRY[kind].from_config(cfg)


def save_predictor(model: Predictor, path) -> None:
    Path(path).write_text(predictor_to_json(model), encoding="utf-8")


def load_predictor(path) -> Predictor:
    return predictor_from_json(Path(path).read_text(encoding="utf-8"))
