"""Binary kernel SVM trained with sequential minimal optimization.

The solver is the two-at-a-time SMO variant with a random second index:
no QP library, just the kernel matrix and the box constraints. Labels are
mapped to -1/+1 internally. The decision function is smooth in the input
for both supported kernels, so its gradient is available in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ..core import Dataset, ParamVector
from ..errors import ArityError, ConvergenceError, SpecError
from .base import Predictor


@dataclass(frozen=True)
class RbfKernel:
    gamma: float = 1.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise SpecError("rbf gamma must be positive")

    def matrix(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        sq = (np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :]
              - 2.0 * A @ B.T)
        return np.exp(-self.gamma * np.maximum(sq, 0.0))

    def gradient(self, sv: np.ndarray, x: np.ndarray) -> np.ndarray:
        """d k(sv_i, x) / dx for every support vector, shape (n_sv, d)."""
        diff = x[None, :] - sv
        k = np.exp(-self.gamma * np.sum(diff * diff, axis=1))
        return -2.0 * self.gamma * diff * k[:, None]

    def to_config(self) -> dict:
        return {"type": "rbf", "gamma": self.gamma}


@dataclass(frozen=True)
class PolyKernel:
    """k(u, v) = (u . v + coef) ** degree"""

    degree: int = 3
    coef: float = 1.0

    def __post_init__(self):
        if self.degree < 1:
            raise SpecError("polynomial degree must be >= 1")

    def matrix(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        return (A @ B.T + self.coef) ** self.degree

    def gradient(self, sv: np.ndarray, x: np.ndarray) -> np.ndarray:
        inner = sv @ x + self.coef
        return self.degree * (inner ** (self.degree - 1))[:, None] * sv

    def to_config(self) -> dict:
        return {"type": "poly", "degree": self.degree, "coef": self.coef}


Kernel = Union[RbfKernel, PolyKernel]


def kernel_from_config(cfg: dict) -> Kernel:
    if cfg["type"] == "rbf":
        return RbfKernel(cfg["gamma"])
    if cfg["type"] == "poly":
        return PolyKernel(cfg["degree"], cfg["coef"])
    raise SpecError(f"unknown kernel type {cfg['type']!r}")


class KernelSvmModel(Predictor):
    """f(x) = sum_i dual_coef_i k(sv_i, x) + b, with dual_coef_i = alpha_i y_i.

    Class probabilities are the logistic squash of the margin; this keeps
    SVMs usable in probability-based probing energies without a separate
    calibration step.
    """

    kind = "kernel-svm"

    def __init__(self, support_vectors: np.ndarray, dual_coef: np.ndarray,
                 b: float, kernel: Kernel):
        self.support_vectors = np.asarray(support_vectors, dtype=float)
        self.dual_coef = np.asarray(dual_coef, dtype=float)
        self.b = float(b)
        self.kernel = kernel

    @property
    def input_dim(self) -> int:
        return self.support_vectors.shape[1]

    @property
    def n_classes(self) -> Optional[int]:
        return 2

    @property
    def differentiable(self) -> bool:
        return True

    def raw_output_batch(self, X) -> np.ndarray:
        X = self._check_batch(X)
        k = self.kernel.matrix(X, self.support_vectors)
        return (k @ self.dual_coef + self.b)[:, None]

    def raw_jacobian(self, x) -> np.ndarray:
        x = self._check_input(x)
        grads = self.kernel.gradient(self.support_vectors, x)
        return (self.dual_coef @ grads)[None, :]

    def get_params(self) -> ParamVector:
        return ParamVector(np.append(self.dual_coef, self.b),
                           (("dual_coef", self.dual_coef.size), ("intercept", 1)))

    def with_params(self, theta) -> "KernelSvmModel":
        theta = np.asarray(theta, dtype=float)
        return KernelSvmModel(self.support_vectors, theta[:-1], theta[-1], self.kernel)

    def to_config(self) -> dict:
        return {"kind": self.kind,
                "support_vectors": self.support_vectors.tolist(),
                "dual_coef": self.dual_coef.tolist(),
                "b": self.b,
                "kernel": self.kernel.to_config()}

    @classmethod
    def from_config(cls, cfg: dict) -> "KernelSvmModel":
        return cls(np.asarray(cfg["support_vectors"], dtype=float),
                   np.asarray(cfg["dual_coef"], dtype=float),
                   cfg["b"], kernel_from_config(cfg["kernel"]))


def _kkt_violation(alphas: np.ndarray, yf: np.ndarray, C: float) -> float:
    at_zero = alphas <= 1e-10
    at_cap = alphas >= C - 1e-10
    interior = ~(at_zero | at_cap)
    viol = 0.0
    if at_zero.any():
        viol = max(viol, float(np.max(1.0 - yf[at_zero], initial=0.0)))
    if at_cap.any():
        viol = max(viol, float(np.max(yf[at_cap] - 1.0, initial=0.0)))
    if interior.any():
        viol = max(viol, float(np.max(np.abs(yf[interior] - 1.0))))
    return viol


def fit_kernel_svm(data: Dataset, kernel: Kernel, C: float = 1.0, tol: float = 5e-4,
                   max_sweeps: int = 2000, seed: int = 0) -> KernelSvmModel:
    """Train a soft-margin binary SVM by SMO.

    Platt's working-set heuristics with an incrementally maintained error
    cache: alternate full sweeps with sweeps over interior multipliers, and
    pick the partner maximizing the error gap. Terminates when no multiplier
    violates the KKT conditions beyond `tol`; raises ConvergenceError
    (carrying the worst KKT violation) if the sweep cap is hit first or the
    final check fails.
    """
    if C <= 0:
        raise SpecError("C must be positive")
    if data.y is None:
        raise SpecError("SVM training needs labeled data")
    uniq = np.unique(data.y)
    if not np.all(np.isin(uniq, (0.0, 1.0))):
        raise ArityError(f"binary labels in {{0, 1}} required, got values {uniq}")

    X = data.X
    y = np.where(data.y > 0.5, 1.0, -1.0)
    n = X.shape[0]
    K = kernel.matrix(X, X)
    rng = np.random.default_rng(seed)

    alphas = np.zeros(n)
    b = 0.0
    errors = -y.copy()  # E_i = f(x_i) - y_i, maintained incrementally

    def take_step(i1: int, i2: int) -> bool:
        nonlocal b, errors
        if i1 == i2:
            return False
        a1_old, a2_old = alphas[i1], alphas[i2]
        y1, y2 = y[i1], y[i2]
        e1, e2 = errors[i1], errors[i2]
        if y1 != y2:
            lo, hi = max(0.0, a2_old - a1_old), min(C, C + a2_old - a1_old)
        else:
            lo, hi = max(0.0, a1_old + a2_old - C), min(C, a1_old + a2_old)
        if lo >= hi:
            return False
        curvature = K[i1, i1] + K[i2, i2] - 2.0 * K[i1, i2]
        if curvature <= 1e-12:
            return False
        a2 = float(np.clip(a2_old + y2 * (e1 - e2) / curvature, lo, hi))
        if abs(a2 - a2_old) < 1e-8 * (a2 + a2_old + 1e-8):
            return False
        a1 = a1_old + y1 * y2 * (a2_old - a2)
        d1, d2 = y1 * (a1 - a1_old), y2 * (a2 - a2_old)
        b1 = b - e1 - d1 * K[i1, i1] - d2 * K[i1, i2]
        b2 = b - e2 - d1 * K[i1, i2] - d2 * K[i2, i2]
        if 0 < a1 < C:
            b_new = b1
        elif 0 < a2 < C:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)
        errors += d1 * K[:, i1] + d2 * K[:, i2] + (b_new - b)
        alphas[i1], alphas[i2] = a1, a2
        b = b_new
        return True

    def examine(i2: int) -> bool:
        r2 = errors[i2] * y[i2]
        if not ((r2 < -tol and alphas[i2] < C) or (r2 > tol and alphas[i2] > 0)):
            return False
        interior = np.nonzero((alphas > 1e-10) & (alphas < C - 1e-10))[0]
        if interior.size > 1:
            i1 = int(interior[np.argmax(np.abs(errors[interior] - errors[i2]))])
            if take_step(i1, i2):
                return True
        if interior.size:
            start = int(rng.integers(interior.size))
            for k in range(interior.size):
                if take_step(int(interior[(start + k) % interior.size]), i2):
                    return True
        start = int(rng.integers(n))
        for k in range(n):
            if take_step((start + k) % n, i2):
                return True
        return False

    sweeps = 0
    examine_all = True
    num_changed = 1
    while num_changed > 0 or examine_all:
        if sweeps >= max_sweeps:
            yf = y * ((alphas * y) @ K + b)
            raise ConvergenceError(
                f"SMO did not converge in {max_sweeps} sweeps; "
                f"max KKT violation {_kkt_violation(alphas, yf, C):.2e}",
                _kkt_violation(alphas, yf, C))
        sweeps += 1
        num_changed = 0
        if examine_all:
            candidates = range(n)
        else:
            candidates = np.nonzero((alphas > 1e-10) & (alphas < C - 1e-10))[0]
        for i2 in candidates:
            num_changed += examine(int(i2))
        if examine_all:
            examine_all = False
        elif num_changed == 0:
            examine_all = True

    # pin b to the interior support vectors (the incremental rule drifts)
    margins = (alphas * y) @ K
    interior = (alphas > 1e-10) & (alphas < C - 1e-10)
    if interior.any():
        b = float(np.mean(y[interior] - margins[interior]))
    yf = y * (margins + b)
    violation = _kkt_violation(alphas, yf, C)
    if violation > 1e-3:
        raise ConvergenceError(
            f"SMO stalled with max KKT violation {violation:.2e}", violation)

    keep = alphas > 1e-10
    return KernelSvmModel(X[keep], (alphas * y)[keep], b, kernel)
