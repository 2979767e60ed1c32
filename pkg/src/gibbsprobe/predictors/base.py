"""Uniform prediction interface shared by every trained model.

A Predictor exposes hard predictions, class probabilities, a scalar
decision value, and (when the model is differentiable) exact analytic
input gradients. Probing energies are written against this surface only,
so any model kind can back any probing scenario.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Optional

import numpy as np

from ..core import ParamVector
from ..errors import ArityError, DimensionError, NotDifferentiableError


class Predictor(ABC):
    """A trained model over encoded feature vectors."""

    kind: str = "abstract"

    @property
    @abstractmethod
    def input_dim(self) -> int: ...

    @property
    @abstractmethod
    def n_classes(self) -> Optional[int]:
        """Number of classes for classifiers, None for regressors."""

    @property
    def is_classifier(self) -> bool:
        return self.n_classes is not None

    @property
    @abstractmethod
    def differentiable(self) -> bool: ...

    def _check_input(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.input_dim,):
            raise DimensionError(f"{self.kind}: expected input of dimension "
                                 f"{self.input_dim}, got shape {x.shape}")
        return x

    def _check_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise DimensionError(f"{self.kind}: expected a batch of dimension "
                                 f"{self.input_dim} rows, got shape {X.shape}")
        return X

    # Subclasses implement the batch forms; single-point forms derive from them.

    @abstractmethod
    def raw_output_batch(self, X: np.ndarray) -> np.ndarray:
        """Raw model outputs, shape (n, n_outputs): logits for classifiers,
        the predicted value for regressors."""

    def raw_output(self, x) -> np.ndarray:
        return self.raw_output_batch(self._check_input(x)[None, :])[0]

    def predict_proba_batch(self, X) -> np.ndarray:
        if not self.is_classifier:
            raise ArityError(f"{self.kind} is a regressor; it has no class probabilities")
        raw = self.raw_output_batch(self._check_batch(X))
        if raw.shape[1] == 1:  # single-logit binary models
            p1 = _sigmoid(raw[:, 0])
            return np.column_stack([1.0 - p1, p1])
        return _softmax(raw)

    def predict_proba(self, x) -> np.ndarray:
        return self.predict_proba_batch(self._check_input(x)[None, :])[0]

    def decision_value_batch(self, X) -> np.ndarray:
        """Scalar decision function: regression output, or the log-odds of
        class 1 for binary classifiers."""
        raw = self.raw_output_batch(self._check_batch(X))
        if not self.is_classifier:
            return raw[:, 0]
        if self.n_classes != 2:
            raise ArityError(f"{self.kind}: decision_value needs a binary classifier")
        if raw.shape[1] == 1:
            return raw[:, 0]
        return raw[:, 1] - raw[:, 0]

    def decision_value(self, x) -> float:
        return float(self.decision_value_batch(self._check_input(x)[None, :])[0])

    def predict_batch(self, X) -> np.ndarray:
        if self.is_classifier:
            return np.argmax(self.predict_proba_batch(X), axis=1).astype(float)
        return self.raw_output_batch(self._check_batch(X))[:, 0]

    def predict(self, x) -> float:
        return float(self.predict_batch(self._check_input(x)[None, :])[0])

    # Gradients. Only differentiable models implement raw_jacobian; the
    # probability and decision gradients follow by the chain rule.

    def raw_jacobian(self, x) -> np.ndarray:
        """Exact Jacobian of raw outputs w.r.t. the input, shape (n_outputs, d)."""
        raise NotDifferentiableError(
            f"{self.kind} has a locally constant prediction function; "
            "use smoothed gradients instead")

    def input_gradient(self, x, output: int = 0) -> np.ndarray:
        """Exact gradient of one raw output coordinate w.r.t. the input."""
        return self.raw_jacobian(x)[output]

    def proba_jacobian(self, x) -> np.ndarray:
        """Exact Jacobian of class probabilities w.r.t. the input, (K, d)."""
        if not self.is_classifier:
            raise ArityError(f"{self.kind} is a regressor")
        x = self._check_input(x)
        raw = self.raw_output(x)
        jac = self.raw_jacobian(x)
        if raw.shape[0] == 1:
            p1 = _sigmoid(raw[0])
            dp1 = p1 * (1.0 - p1) * jac[0]
            return np.vstack([-dp1, dp1])
        p = _softmax(raw[None, :])[0]
        # d softmax_k / d logit_j = p_k (delta_kj - p_j)
        return (np.diag(p) - np.outer(p, p)) @ jac

    def decision_gradient(self, x) -> np.ndarray:
        """Exact gradient of the scalar decision value."""
        jac = self.raw_jacobian(x)
        if not self.is_classifier:
            return jac[0]
        if self.n_classes != 2:
            raise ArityError(f"{self.kind}: decision_value needs a binary classifier")
        if jac.shape[0] == 1:
            return jac[0]
        return jac[1] - jac[0]

    # Parameter access for ensemble probes. Parametric models override.

    def get_params(self) -> ParamVector:
        raise NotDifferentiableError(f"{self.kind} does not expose a flat parameter vector")

    def with_params(self, theta: np.ndarray) -> "Predictor":
        raise NotDifferentiableError(f"{self.kind} cannot be rebuilt from a parameter vector")

    def to_config(self) -> dict:
        """JSON-serializable description of the trained model."""
        raise NotImplementedError


def _sigmoid(z):
    z = np.asarray(z, dtype=float)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def _softmax(raw: np.ndarray) -> np.ndarray:
    shifted = raw - raw.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)
