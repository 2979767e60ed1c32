"""Desk-scale trainable models behind one prediction interface."""

from .base import Predictor
from .linear import (
    LinearRegressionModel,
    LogisticRegressionModel,
    fit_linear_regression,
    fit_logistic_regression,
)
from .mlp import LrSchedule, MlpModel, MlpSpec, fit_mlp
from .svm import KernelSvmModel, PolyKernel, RbfKernel, fit_kernel_svm
from .trees import DecisionTreeModel, RandomForestModel, fit_forest, fit_tree
from .io import load_predictor, predictor_from_json, predictor_to_json, save_predictor

__all__ = [
    "Predictor",
    "LinearRegressionModel",
    "LogisticRegressionModel",
    "fit_linear_regression",
    "fit_logistic_regression",
    "MlpSpec",
    "LrSchedule",
    "MlpModel",
    "fit_mlp",
    "RbfKernel",
    "PolyKernel",
    "KernelSvmModel",
    "fit_kernel_svm",
    "DecisionTreeModel",
    "RandomForestModel",
    "fit_tree",
    "fit_forest",
    "predictor_to_json",
    "predictor_from_json",
    "save_predictor",
    "load_predictor",
]
