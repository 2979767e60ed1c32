"""Linear and logistic regression trained from scratch."""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..core import Dataset, ParamVector
from ..errors import ArityError, SingularFitError, SpecError
from .base import Predictor, _sigmoid


class LinearRegressionModel(Predictor):
    """Ordinary least squares: prediction xi . f + b."""

    kind = "linear-regression"

    def __init__(self, xi: np.ndarray, b: float):
        self.xi = np.asarray(xi, dtype=float)
        self.b = float(b)

    @property
    def input_dim(self) -> int:
        return self.xi.size

    @property
    def n_classes(self) -> Optional[int]:
        return None

    @property
    def differentiable(self) -> bool:
        return True

    def raw_output_batch(self, X) -> np.ndarray:
        X = self._check_batch(X)
        return (X @ self.xi + self.b)[:, None]

    def raw_jacobian(self, x) -> np.ndarray:
        self._check_input(x)
        return self.xi[None, :].copy()

    def get_params(self) -> ParamVector:
        return ParamVector(np.append(self.xi, self.b),
                           (("coefficients", self.xi.size), ("intercept", 1)))

    def with_params(self, theta) -> "LinearRegressionModel":
        theta = np.asarray(theta, dtype=float)
        return LinearRegressionModel(theta[:-1], theta[-1])

    def to_config(self) -> dict:
        return {"kind": self.kind, "xi": self.xi.tolist(), "b": self.b}

    @classmethod
    def from_config(cls, cfg: dict) -> "LinearRegressionModel":
        return cls(np.asarray(cfg["xi"], dtype=float), cfg["b"])


def fit_linear_regression(data: Dataset) -> LinearRegressionModel:
    """Solve the normal equations for the least-squares line.

    Requires more rows than features and a full-column-rank design matrix
    (features plus a constant-1 column); raises SingularFitError otherwise.
    """
    if data.y is None:
        raise SpecError("linear regression needs labeled data")
    n, d = data.X.shape
    design = np.column_stack([data.X, np.ones(n)])
    if n < d + 1:
        raise SingularFitError(f"need more than d={d} rows, got {n}")
    rank = np.linalg.matrix_rank(design)
    if rank < d + 1:
        raise SingularFitError(f"design matrix rank {rank} < {d + 1}; features are collinear")
    theta, *_ = np.linalg.lstsq(design, data.y, rcond=None)
    return LinearRegressionModel(theta[:-1], theta[-1])


class LogisticRegressionModel(Predictor):
    """Binary logistic regression with a single logit w . x + b."""

    kind = "logistic-regression"

    def __init__(self, w: np.ndarray, b: float, final_grad_norm: float = float("nan")):
        self.w = np.asarray(w, dtype=float)
        self.b = float(b)
        self.final_grad_norm = float(final_grad_norm)

    @property
    def input_dim(self) -> int:
        return self.w.size

    @property
    def n_classes(self) -> Optional[int]:
        return 2

    @property
    def differentiable(self) -> bool:
        return True

    def raw_output_batch(self, X) -> np.ndarray:
        X = self._check_batch(X)
        return (X @ self.w + self.b)[:, None]

    def raw_jacobian(self, x) -> np.ndarray:
        self._check_input(x)
        return self.w[None, :].copy()

    def get_params(self) -> ParamVector:
        return ParamVector(np.append(self.w, self.b),
                           (("weights", self.w.size), ("intercept", 1)))

    def with_params(self, theta) -> "LogisticRegressionModel":
        theta = np.asarray(theta, dtype=float)
        return LogisticRegressionModel(theta[:-1], theta[-1])

    def to_config(self) -> dict:
        return {"kind": self.kind, "w": self.w.tolist(), "b": self.b,
                "final_grad_norm": self.final_grad_norm}

    @classmethod
    def from_config(cls, cfg: dict) -> "LogisticRegressionModel":
        return cls(np.asarray(cfg["w"], dtype=float), cfg["b"],
                   cfg.get("final_grad_norm", float("nan")))


def fit_logistic_regression(data: Dataset, l2: float = 0.0, steps: int = 2000,
                            lr: float = 0.5) -> LogisticRegressionModel:
    """Full-batch gradient descent on the l2-regularized mean log loss.

    Features are standardized internally so one learning rate works across
    heterogeneous scales; the l2 penalty applies to the standardized weights
    (the intercept is not regularized) and the returned coefficients are
    folded back to original units. The final gradient norm of the optimized
    objective is recorded on the model.
    """
    if data.y is None:
        raise SpecError("logistic regression needs labeled data")
    if l2 < 0:
        raise SpecError("l2 must be nonnegative")
    if lr <= 0:
        raise SpecError("lr must be positive")
    y = data.y
    uniq = np.unique(y)
    if not np.all(np.isin(uniq, (0.0, 1.0))):
        raise ArityError(f"binary labels in {{0, 1}} required, got values {uniq}")
    mu = data.X.mean(axis=0)
    sd = data.X.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    X = (data.X - mu) / sd
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    for _ in range(steps):
        p = _sigmoid(X @ w + b)
        resid = p - y
        # proximal step: explicit on the log loss, exact shrinkage on the
        # l2 term, stable for arbitrarily large l2
        w = (w - lr * (X.T @ resid / n)) / (1.0 + lr * l2)
        b -= lr * float(resid.mean())
    p = _sigmoid(X @ w + b)
    gw = X.T @ (p - y) / n + l2 * w
    gb = float((p - y).mean())
    grad_norm = float(np.sqrt(np.dot(gw, gw) + gb * gb))
    w_orig = w / sd
    b_orig = b - float(w_orig @ mu)
    return LogisticRegressionModel(w_orig, b_orig, final_grad_norm=grad_norm)
