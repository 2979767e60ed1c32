"""Small fully-connected ReLU networks with manual backpropagation.

Training uses Adam on mini-batches with an exponentially decaying learning
rate. Weights live in plain numpy arrays, which keeps input gradients exact:
the Jacobian w.r.t. the input is the product of the layer linearizations,
not a finite-difference estimate. Dropout is applied only while training;
probing always evaluates the deterministic network.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core import Dataset, ParamVector
from ..errors import SpecError, TrainingDivergedError
from .base import Predictor


@dataclass(frozen=True)
class MlpSpec:
    """Architecture: hidden widths followed by the output width."""

    layer_widths: tuple[int, ...]
    dropout_rate: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "layer_widths", tuple(int(w) for w in self.layer_widths))
        if len(self.layer_widths) < 2:
            raise SpecError("need at least one hidden layer plus the output width")
        if any(w < 1 for w in self.layer_widths):
            raise SpecError("layer widths must be positive")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise SpecError("dropout_rate must lie in [0, 1)")


@dataclass(frozen=True)
class LrSchedule:
    """Exponential decay: start * decay ** (step // every)."""

    start: float = 0.1
    decay: float = 0.9
    every: int = 100

    def __post_init__(self):
        if self.start <= 0 or not (0 < self.decay <= 1) or self.every < 1:
            raise SpecError("invalid learning-rate schedule")

    def at(self, step: int) -> float:
        return self.start * self.decay ** (step // self.every)


class MlpModel(Predictor):
    kind = "mlp"

    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray],
                 n_classes: Optional[int]):
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        self._n_classes = n_classes

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def n_classes(self) -> Optional[int]:
        return self._n_classes

    @property
    def differentiable(self) -> bool:
        return True

    def raw_output_batch(self, X) -> np.ndarray:
        h = self._check_batch(X)
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ W.T + b
            if i < last:
                h = np.maximum(h, 0.0)
        return h

    def raw_jacobian(self, x) -> np.ndarray:
        x = self._check_input(x)
        h = x
        jac = None
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = W @ h + b
            jac = W.copy() if jac is None else W @ jac
            if i < last:
                act = (z > 0).astype(float)
                jac = act[:, None] * jac
                h = np.maximum(z, 0.0)
        return jac

    def get_params(self) -> ParamVector:
        parts, layout = [], []
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            parts.extend([W.ravel(), b])
            layout.extend([(f"W{i}", W.size), (f"b{i}", b.size)])
        return ParamVector(np.concatenate(parts), tuple(layout))

    def with_params(self, theta) -> "MlpModel":
        theta = np.asarray(theta, dtype=float)
        weights, biases = [], []
        offset = 0
        for W, b in zip(self.weights, self.biases):
            weights.append(theta[offset:offset + W.size].reshape(W.shape))
            offset += W.size
            biases.append(theta[offset:offset + b.size].copy())
            offset += b.size
        if offset != theta.size:
            raise SpecError(f"parameter vector has {theta.size} entries, expected {offset}")
        return MlpModel(weights, biases, self._n_classes)

    def to_config(self) -> dict:
        return {
            "kind": self.kind,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "n_classes": self._n_classes,
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "MlpModel":
        return cls([np.asarray(w, dtype=float) for w in cfg["weights"]],
                   [np.asarray(b, dtype=float) for b in cfg["biases"]],
                   cfg["n_classes"])


def _softmax_ce(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    shifted = logits - logits.max(axis=1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=1))
    idx = np.arange(logits.shape[0])
    loss = float(np.mean(logz - shifted[idx, labels]))
    p = np.exp(shifted - logz[:, None])
    grad = p
    grad[idx, labels] -= 1.0
    return loss, grad / logits.shape[0]


def fit_mlp(data: Dataset, spec: MlpSpec, steps: int = 10000, batch: int = 128,
            lr_schedule: LrSchedule = LrSchedule(), seed: int = 0) -> MlpModel:
    """Train an MLP with Adam; raises TrainingDivergedError if the loss
    becomes non-finite, reporting the offending step."""
    if data.y is None:
        raise SpecError("fit_mlp needs labeled data")
    classify = data.n_classes is not None
    out_width = spec.layer_widths[-1]
    if classify and out_width != data.n_classes:
        raise SpecError(f"output width {out_width} != number of classes {data.n_classes}")
    if not classify and out_width != 1:
        raise SpecError("regression MLPs need output width 1")

    rng = np.random.default_rng(seed)
    dims = [data.dim, *spec.layer_widths]
    weights = [rng.standard_normal((dims[i + 1], dims[i])) * np.sqrt(2.0 / dims[i])
               for i in range(len(dims) - 1)]
    biases = [np.zeros(dims[i + 1]) for i in range(len(dims) - 1)]

    m = [np.zeros_like(w) for w in weights] + [np.zeros_like(b) for b in biases]
    v = [np.zeros_like(w) for w in weights] + [np.zeros_like(b) for b in biases]
    beta1, beta2, eps = 0.9, 0.999, 1e-8

    y_int = data.labels_int() if classify else None
    n = data.n
    last = len(weights) - 1

    for step in range(steps):
        idx = rng.choice(n, size=min(batch, n), replace=False)
        xb = data.X[idx]
        # forward pass, keeping pre-activations and dropout masks
        hs = [xb]
        zs = []
        masks = []
        h = xb
        for i, (W, b) in enumerate(zip(weights, biases)):
            z = h @ W.T + b
            zs.append(z)
            if i < last:
                h = np.maximum(z, 0.0)
                if spec.dropout_rate > 0.0:
                    keep = rng.random(h.shape) >= spec.dropout_rate
                    h = h * keep / (1.0 - spec.dropout_rate)
                    masks.append(keep)
                else:
                    masks.append(None)
                hs.append(h)
        logits = zs[-1]
        with np.errstate(over="ignore", invalid="ignore"):
            if classify:
                loss, dlogits = _softmax_ce(logits, y_int[idx])
            else:
                resid = logits[:, 0] - data.y[idx]
                loss = float(np.mean(resid ** 2))
                dlogits = (2.0 * resid / resid.size)[:, None]
        if not np.isfinite(loss):
            raise TrainingDivergedError(f"loss became non-finite at step {step}", step)

        # backward pass
        grads_w = [None] * len(weights)
        grads_b = [None] * len(weights)
        delta = dlogits
        for i in range(last, -1, -1):
            grads_w[i] = delta.T @ hs[i]
            grads_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = delta @ weights[i]
                if spec.dropout_rate > 0.0 and masks[i - 1] is not None:
                    delta = delta * masks[i - 1] / (1.0 - spec.dropout_rate)
                delta = delta * (zs[i - 1] > 0)

        lr = lr_schedule.at(step)
        flat = grads_w + grads_b
        params = weights + biases
        t = step + 1
        for j, (p, g) in enumerate(zip(params, flat)):
            m[j] = beta1 * m[j] + (1 - beta1) * g
            v[j] = beta2 * v[j] + (1 - beta2) * g * g
            mhat = m[j] / (1 - beta1 ** t)
            vhat = v[j] / (1 - beta2 ** t)
            p -= lr * mhat / (np.sqrt(vhat) + eps)

    return MlpModel(weights, biases, data.n_classes if classify else None)
