"""Composable probing energies over the data space.

A probing energy is a sum of terms, each expressing one requirement on the
samples we want from a trained model: match a chosen label, disagree with a
second model, sit near the decision boundary, be sensitive to parameter
perturbations, or stay close to an anchor point. Low energy marks inputs
that answer the question; the sampler module then draws from
exp(-energy / temperature).

Every term evaluates to a finite value for finite inputs (probabilities are
clamped away from 0 and 1), and terms backed by differentiable models carry
exact analytic gradients.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import ParamVector
from .errors import ArityError, DimensionError, NotDifferentiableError, SpecError
from .predictors.base import Predictor

P_EPS = 1e-12

EXACT = "exact"
SMOOTHED = "smoothed"


def _clamp(p):
    return np.clip(p, P_EPS, 1.0 - P_EPS)


def _clamp_scalar(p: float) -> tuple[float, float]:
    """Clamped probability plus the derivative of the clamp (0 on the
    saturated plateaus, 1 inside). Gradients must differentiate the clamped
    value that evaluate() actually computes, or they disagree with it."""
    if p <= P_EPS:
        return P_EPS, 0.0
    if p >= 1.0 - P_EPS:
        return 1.0 - P_EPS, 0.0
    return p, 1.0


class EnergyTerm:
    """One additive component of a probing energy."""

    dim: int
    differentiable: bool = False

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, x) -> float:
        return float(self.evaluate_batch(np.asarray(x, dtype=float)[None, :])[0])

    def gradient(self, x) -> np.ndarray:
        raise NotDifferentiableError(f"{type(self).__name__} has no exact gradient")


class ProbeFunction:
    """A probing energy: sum of terms plus the gradient mode it supports.

    gradient_mode is "exact" when every term has an analytic gradient and
    "smoothed" otherwise (callers must then use Monte-Carlo smoothed
    gradients for proposals; see the sampler module).
    """

    def __init__(self, terms: Sequence[EnergyTerm]):
        terms = tuple(terms)
        if not terms:
            raise SpecError("a probing energy needs at least one term")
        dims = {t.dim for t in terms}
        if len(dims) != 1:
            raise DimensionError(f"terms disagree on the input dimension: {sorted(dims)}")
        self.terms = terms
        self.dim = dims.pop()
        self.gradient_mode = EXACT if all(t.differentiable for t in terms) else SMOOTHED

    def evaluate_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise DimensionError(f"expected batch of dimension {self.dim}, got {X.shape}")
        total = np.zeros(X.shape[0])
        for term in self.terms:
            total += term.evaluate_batch(X)
        return total

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionError(f"expected vector of dimension {self.dim}, got {x.shape}")
        return float(self.evaluate_batch(x[None, :])[0])

    def gradient(self, x) -> np.ndarray:
        if self.gradient_mode != EXACT:
            raise NotDifferentiableError(
                "this probing energy contains locally-flat terms; "
                "sample it with gradient_mode='smoothed'")
        x = np.asarray(x, dtype=float)
        grad = np.zeros(self.dim)
        for term in self.terms:
            grad += term.gradient(x)
        return grad

    def __add__(self, other: "ProbeFunction") -> "ProbeFunction":
        if not isinstance(other, ProbeFunction):
            return NotImplemented
        return ProbeFunction(self.terms + other.terms)


@dataclass(frozen=True)
class AnchorRegularizer(EnergyTerm):
    """Soft locality constraint: lam * sum_i w_i |x_i - anchor_i| ** r."""

    anchor: np.ndarray
    lam: float = 1.0
    r: float = 2.0
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        anchor = np.array(self.anchor, dtype=float)
        anchor.setflags(write=False)
        object.__setattr__(self, "anchor", anchor)
        if self.lam < 0:
            raise SpecError("regularizer strength lam must be nonnegative")
        if self.r < 1:
            raise SpecError("norm order r must be >= 1")
        if self.weights is not None:
            w = np.array(self.weights, dtype=float)
            if w.shape != anchor.shape:
                raise DimensionError("per-feature weights must match the anchor dimension")
            if np.any(w < 0):
                raise SpecError("per-feature weights must be nonnegative")
            w.setflags(write=False)
            object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.anchor.size

    @property
    def differentiable(self) -> bool:
        return True

    def evaluate_batch(self, X) -> np.ndarray:
        diff = np.abs(X - self.anchor) ** self.r
        if self.weights is not None:
            diff = diff * self.weights
        return self.lam * diff.sum(axis=1)

    def gradient(self, x) -> np.ndarray:
        diff = np.asarray(x, dtype=float) - self.anchor
        grad = self.lam * self.r * np.abs(diff) ** (self.r - 1.0) * np.sign(diff)
        if self.weights is not None:
            grad = grad * self.weights
        return grad


@dataclass(frozen=True)
class ParamEnsemble:
    """Gaussian parameter perturbations around a trained model.

    Members are fully materialized predictors, reproducible from
    (center, sigma_theta, seed); see sampler.draw_param_ensemble.
    """

    center: Predictor
    sigma_theta: float
    seed: int
    thetas: np.ndarray
    members: tuple[Predictor, ...]

    def __post_init__(self):
        if len(self.members) == 0:
            raise SpecError("parameter ensemble must be nonempty")
        thetas = np.array(self.thetas, dtype=float)
        thetas.setflags(write=False)
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "members", tuple(self.members))

    @property
    def size(self) -> int:
        return len(self.members)

    def param_vectors(self) -> tuple[ParamVector, ...]:
        layout = self.center.get_params().layout
        return tuple(ParamVector(t, layout) for t in self.thetas)


def _require_binary(p: Predictor, role: str):
    if p.n_classes != 2:
        raise ArityError(f"{role} must be a binary classifier, got {p.kind} "
                         f"with n_classes={p.n_classes}")


def _require_same_dim(p1: Predictor, p2: Predictor):
    if p1.input_dim != p2.input_dim:
        raise DimensionError(f"models disagree on the input dimension: "
                             f"{p1.input_dim} vs {p2.input_dim}")


def _p1_grad(p: Predictor, x) -> np.ndarray:
    """Gradient of the class-1 probability."""
    return p.proba_jacobian(x)[1]


def _binary_ce(p1: np.ndarray, t: np.ndarray) -> np.ndarray:
    p1 = _clamp(p1)
    return -(t * np.log(p1) + (1.0 - t) * np.log(1.0 - p1))


class _FixedLabelTerm(EnergyTerm):
    """Cross-entropy against a fixed class for classifiers, squared error
    against a fixed value for regressors."""

    def __init__(self, predictor: Predictor, target):
        self.predictor = predictor
        self.dim = predictor.input_dim
        self.differentiable = predictor.differentiable
        if predictor.is_classifier:
            target = int(target)
            if not (0 <= target < predictor.n_classes):
                raise ArityError(f"label {target} out of range for "
                                 f"{predictor.n_classes}-class model")
        else:
            target = float(target)
        self.target = target

    def evaluate_batch(self, X) -> np.ndarray:
        if self.predictor.is_classifier:
            p = self.predictor.predict_proba_batch(X)[:, self.target]
            return -np.log(_clamp(p))
        pred = self.predictor.raw_output_batch(X)[:, 0]
        return (pred - self.target) ** 2

    def gradient(self, x) -> np.ndarray:
        if self.predictor.is_classifier:
            p, active = _clamp_scalar(float(self.predictor.predict_proba(x)[self.target]))
            if not active:
                return np.zeros(self.dim)
            return -self.predictor.proba_jacobian(x)[self.target] / p
        pred = float(self.predictor.raw_output(x)[0])
        return 2.0 * (pred - self.target) * self.predictor.raw_jacobian(x)[0]


class _EnsembleFixedLabelTerm(EnergyTerm):
    """Average fixed-label loss over ensemble members."""

    def __init__(self, ensemble: ParamEnsemble, target):
        self.terms = tuple(_FixedLabelTerm(m, target) for m in ensemble.members)
        self.dim = self.terms[0].dim
        self.differentiable = all(t.differentiable for t in self.terms)

    def evaluate_batch(self, X) -> np.ndarray:
        total = np.zeros(np.asarray(X).shape[0])
        for term in self.terms:
            total += term.evaluate_batch(X)
        return total / len(self.terms)

    def gradient(self, x) -> np.ndarray:
        grad = np.zeros(self.dim)
        for term in self.terms:
            grad += term.gradient(x)
        return grad / len(self.terms)


class _ContrastTerm(EnergyTerm):
    """Cross-entropy of model 1 against the complement of model 2's prediction.

    With soft targets the complement is 1 - P2(class 1); with hard targets it
    is the opposite of model 2's predicted label. A non-differentiable second
    model contributes no gradient: its output is locally constant in x.
    """

    def __init__(self, p1: Predictor, p2: Predictor, soft: bool):
        _require_binary(p1, "first model")
        _require_binary(p2, "second model")
        _require_same_dim(p1, p2)
        self.p1 = p1
        self.p2 = p2
        self.soft = soft
        self.dim = p1.input_dim
        self.differentiable = p1.differentiable

    def _target_batch(self, X) -> np.ndarray:
        q2 = self.p2.predict_proba_batch(X)[:, 1]
        if self.soft:
            return 1.0 - q2
        return 1.0 - (q2 > 0.5).astype(float)

    def evaluate_batch(self, X) -> np.ndarray:
        q1 = self.p1.predict_proba_batch(X)[:, 1]
        return _binary_ce(q1, self._target_batch(X))

    def gradient(self, x) -> np.ndarray:
        q1, active = _clamp_scalar(float(self.p1.predict_proba(x)[1]))
        t = float(self._target_batch(np.asarray(x, dtype=float)[None, :])[0])
        if active:
            grad = (q1 - t) / (q1 * (1.0 - q1)) * _p1_grad(self.p1, x)
        else:
            grad = np.zeros(self.dim)
        if self.soft and self.p2.differentiable:
            # the target t = 1 - q2(x) moves with x as well
            dce_dt = float(np.log((1.0 - q1) / q1))
            grad = grad + dce_dt * (-_p1_grad(self.p2, x))
        return grad


class _RegressionContrastTerm(EnergyTerm):
    """exp(-(y1 - y2)^2 / sigma^2): high while the models agree, decaying as
    their predictions separate beyond the yardstick sigma."""

    def __init__(self, p1: Predictor, p2: Predictor, sigma: float):
        if p1.is_classifier or p2.is_classifier:
            raise ArityError("regression contrast needs two regressors")
        _require_same_dim(p1, p2)
        if sigma <= 0:
            raise SpecError("sigma must be positive")
        self.p1, self.p2, self.sigma = p1, p2, float(sigma)
        self.dim = p1.input_dim
        self.differentiable = p1.differentiable and p2.differentiable

    def evaluate_batch(self, X) -> np.ndarray:
        d = self.p1.raw_output_batch(X)[:, 0] - self.p2.raw_output_batch(X)[:, 0]
        return np.exp(-(d ** 2) / self.sigma ** 2)

    def gradient(self, x) -> np.ndarray:
        d = float(self.p1.raw_output(x)[0] - self.p2.raw_output(x)[0])
        dgrad = self.p1.raw_jacobian(x)[0] - self.p2.raw_jacobian(x)[0]
        return np.exp(-(d ** 2) / self.sigma ** 2) * (-2.0 * d / self.sigma ** 2) * dgrad


class _RiskyNormTerm(EnergyTerm):
    """|f(x) - alpha| ** r with f the decision value or the class-1 probability."""

    def __init__(self, predictor: Predictor, alpha: float, r: float, on: str):
        if r < 1:
            raise SpecError("norm order r must be >= 1")
        if on not in ("decision", "probability"):
            raise SpecError("on must be 'decision' or 'probability'")
        if on == "probability" and not predictor.is_classifier:
            raise ArityError("probability anchor needs a classifier")
        self.predictor = predictor
        self.alpha = float(alpha)
        self.r = float(r)
        self.on = on
        self.dim = predictor.input_dim
        self.differentiable = predictor.differentiable

    def _f_batch(self, X) -> np.ndarray:
        if self.on == "probability":
            return self.predictor.predict_proba_batch(X)[:, 1]
        return self.predictor.decision_value_batch(X)

    def evaluate_batch(self, X) -> np.ndarray:
        return np.abs(self._f_batch(X) - self.alpha) ** self.r

    def gradient(self, x) -> np.ndarray:
        if self.on == "probability":
            f = float(self.predictor.predict_proba(x)[1])
            fgrad = _p1_grad(self.predictor, x)
        else:
            f = self.predictor.decision_value(x)
            fgrad = self.predictor.decision_gradient(x)
        d = f - self.alpha
        return self.r * np.abs(d) ** (self.r - 1.0) * np.sign(d) * fgrad


class _NegativeEntropyTerm(EnergyTerm):
    """sum_k q_k log q_k, minimized at the uniform distribution."""

    def __init__(self, predictor: Predictor):
        if not predictor.is_classifier or predictor.n_classes < 2:
            raise ArityError("entropy probing needs a classifier with K >= 2 classes")
        self.predictor = predictor
        self.dim = predictor.input_dim
        self.differentiable = predictor.differentiable

    def evaluate_batch(self, X) -> np.ndarray:
        q = _clamp(self.predictor.predict_proba_batch(X))
        return np.sum(q * np.log(q), axis=1)

    def gradient(self, x) -> np.ndarray:
        raw = self.predictor.predict_proba(x)
        active = (raw > P_EPS) & (raw < 1.0 - P_EPS)
        q = _clamp(raw)
        jac = self.predictor.proba_jacobian(x)
        return (active * (1.0 + np.log(q))) @ jac


class _ParamSensitiveTerm(EnergyTerm):
    """Average cross-entropy of ensemble members against the complement of
    the center model's prediction; low where perturbed parameters flip the
    center's call."""

    def __init__(self, ensemble: ParamEnsemble, center: Predictor, soft: bool):
        _require_binary(center, "center model")
        for m in ensemble.members:
            _require_binary(m, "ensemble member")
        _require_same_dim(center, ensemble.members[0])
        self.members = ensemble.members
        self.center = center
        self.soft = soft
        self.dim = center.input_dim
        self.differentiable = (center.differentiable
                               and all(m.differentiable for m in ensemble.members))

    def _target_batch(self, X) -> np.ndarray:
        q = self.center.predict_proba_batch(X)[:, 1]
        if self.soft:
            return 1.0 - q
        return 1.0 - (q > 0.5).astype(float)

    def evaluate_batch(self, X) -> np.ndarray:
        t = self._target_batch(X)
        total = np.zeros(np.asarray(X).shape[0])
        for m in self.members:
            total += _binary_ce(m.predict_proba_batch(X)[:, 1], t)
        return total / len(self.members)

    def gradient(self, x) -> np.ndarray:
        X = np.asarray(x, dtype=float)[None, :]
        t = float(self._target_batch(X)[0])
        grad = np.zeros(self.dim)
        dce_dt_sum = 0.0
        for m in self.members:
            qm, active = _clamp_scalar(float(m.predict_proba(x)[1]))
            if active:
                grad += (qm - t) / (qm * (1.0 - qm)) * _p1_grad(m, x)
            dce_dt_sum += float(np.log((1.0 - qm) / qm))
        grad /= len(self.members)
        if self.soft:
            grad += (dce_dt_sum / len(self.members)) * (-_p1_grad(self.center, x))
        return grad


class _RegressionSensitiveTerm(EnergyTerm):
    """Average of exp(-(y_m - y_center)^2 / sigma^2) over ensemble members."""

    def __init__(self, ensemble: ParamEnsemble, center: Predictor, sigma: float):
        if center.is_classifier:
            raise ArityError("regression sensitivity needs a regressor family")
        if sigma <= 0:
            raise SpecError("sigma must be positive")
        _require_same_dim(center, ensemble.members[0])
        self.members = ensemble.members
        self.center = center
        self.sigma = float(sigma)
        self.dim = center.input_dim
        self.differentiable = (center.differentiable
                               and all(m.differentiable for m in ensemble.members))

    def evaluate_batch(self, X) -> np.ndarray:
        y0 = self.center.raw_output_batch(X)[:, 0]
        total = np.zeros(np.asarray(X).shape[0])
        for m in self.members:
            d = m.raw_output_batch(X)[:, 0] - y0
            total += np.exp(-(d ** 2) / self.sigma ** 2)
        return total / len(self.members)

    def gradient(self, x) -> np.ndarray:
        y0 = float(self.center.raw_output(x)[0])
        g0 = self.center.raw_jacobian(x)[0]
        grad = np.zeros(self.dim)
        for m in self.members:
            d = float(m.raw_output(x)[0]) - y0
            dgrad = m.raw_jacobian(x)[0] - g0
            grad += np.exp(-(d ** 2) / self.sigma ** 2) * (-2.0 * d / self.sigma ** 2) * dgrad
        return grad / len(self.members)


class _CertaintyPinTerm(EnergyTerm):
    """weight * || proba(x) - onehot(target) ||^2, zero only at full certainty."""

    def __init__(self, predictor: Predictor, target_class: int, weight: float):
        if not predictor.is_classifier:
            raise ArityError("certainty pin needs a classifier")
        target_class = int(target_class)
        if not (0 <= target_class < predictor.n_classes):
            raise ArityError(f"class {target_class} out of range for "
                             f"{predictor.n_classes}-class model")
        if weight < 0:
            raise SpecError("weight must be nonnegative")
        self.predictor = predictor
        self.target_class = target_class
        self.weight = float(weight)
        self.dim = predictor.input_dim
        self.differentiable = predictor.differentiable

    def evaluate_batch(self, X) -> np.ndarray:
        q = self.predictor.predict_proba_batch(X)
        onehot = np.zeros(self.predictor.n_classes)
        onehot[self.target_class] = 1.0
        return self.weight * np.sum((q - onehot) ** 2, axis=1)

    def gradient(self, x) -> np.ndarray:
        q = self.predictor.predict_proba(x)
        onehot = np.zeros(self.predictor.n_classes)
        onehot[self.target_class] = 1.0
        jac = self.predictor.proba_jacobian(x)
        return self.weight * 2.0 * (q - onehot) @ jac


def _with_reg(term: EnergyTerm, reg: Optional[AnchorRegularizer]) -> ProbeFunction:
    terms = [term] if reg is None else [term, reg]
    return ProbeFunction(terms)


def fixed_label_energy(predictor: Predictor, target,
                       reg: Optional[AnchorRegularizer] = None) -> ProbeFunction:
    """Low where the model predicts `target` (counterfactual / factual probing
    when anchored at a data point)."""
    return _with_reg(_FixedLabelTerm(predictor, target), reg)


def ensemble_fixed_label_energy(ensemble: ParamEnsemble, target,
                                reg: Optional[AnchorRegularizer] = None) -> ProbeFunction:
    """Fixed-label probing averaged over a parameter ensemble."""
    return _with_reg(_EnsembleFixedLabelTerm(ensemble, target), reg)


def model_contrast_energy(p1: Predictor, p2: Predictor,
                          reg: Optional[AnchorRegularizer] = None,
                          soft: Optional[bool] = None,
                          sigma: float = 1.0) -> ProbeFunction:
    """Low where the two models disagree.

    Binary classifiers use cross-entropy against the complement of the second
    model's prediction (soft by default when the second model is
    differentiable, hard otherwise). Two regressors delegate to the
    exponential form with yardstick `sigma`.
    """
    if not p1.is_classifier and not p2.is_classifier:
        return regression_contrast_energy(p1, p2, sigma, reg)
    if soft is None:
        soft = p2.differentiable
    return _with_reg(_ContrastTerm(p1, p2, soft), reg)


def regression_contrast_energy(p1: Predictor, p2: Predictor, sigma: float,
                               reg: Optional[AnchorRegularizer] = None) -> ProbeFunction:
    """Low where two regressors' predictions separate beyond `sigma`."""
    return _with_reg(_RegressionContrastTerm(p1, p2, sigma), reg)


def risky_energy(predictor: Predictor, alpha: float = 0.5, r: float = 2.0,
                 mode: str = "norm", on: str = "probability",
                 reg: Optional[AnchorRegularizer] = None) -> ProbeFunction:
    """Low near the model's indecision region.

    mode="norm" penalizes |f(x) - alpha| ** r where f is the class-1
    probability (on="probability") or the scalar decision value
    (on="decision"; regressors always use their output). mode="entropy"
    uses the negative Shannon entropy of the class probabilities.
    """
    if mode == "norm":
        if not predictor.is_classifier:
            on = "decision"
        return _with_reg(_RiskyNormTerm(predictor, alpha, r, on), reg)
    if mode == "entropy":
        return _with_reg(_NegativeEntropyTerm(predictor), reg)
    raise SpecError("mode must be 'norm' or 'entropy'")


def param_sensitive_energy(ensemble: ParamEnsemble, center: Predictor,
                           reg: Optional[AnchorRegularizer] = None,
                           soft: bool = True) -> ProbeFunction:
    """Low where parameter perturbations flip the center model's prediction."""
    return _with_reg(_ParamSensitiveTerm(ensemble, center, soft), reg)


def regression_sensitive_energy(ensemble: ParamEnsemble, center: Predictor, sigma: float,
                                reg: Optional[AnchorRegularizer] = None) -> ProbeFunction:
    """Low where parameter perturbations move a regressor's output by more
    than the yardstick sigma."""
    return _with_reg(_RegressionSensitiveTerm(ensemble, center, sigma), reg)


def certainty_pin_energy(pin_model: Predictor, target_class: int,
                         weight: float = 1.0) -> ProbeFunction:
    """Pin a classifier to full certainty on one class; combine additively
    with other energies (for example an entropy term on a second model)."""
    return ProbeFunction([_CertaintyPinTerm(pin_model, target_class, weight)])
