"""Closed-form Gibbs distributions for linear regression with squared loss.

For a linear model with squared error, both halves of the probing pipeline
are Gaussian and can be written down exactly:

  parameter side   the Gibbs distribution over parameters at temperature tau
                   is N(theta_hat, (D'D / (N tau))^-1) around the ordinary
                   least squares solution theta_hat, with D the design matrix
                   carrying a trailing constant-1 column;

  data side        fixing a desired output w, the expected squared error
                   under that parameter distribution is an explicit quadratic
                   in the feature vector, so exp(-G/tau) is again Gaussian.
                   Its mean shifts the data average along the covariance
                   between features and fitted predictions:

                       f_hat = xbar + cov(X, yhat) * (w - mean(yhat))
                                       / (tau + var(yhat))

This module is the ground-truth oracle for the sampler: MALA run on the
quadratic energy must reproduce these Gaussians to Monte-Carlo accuracy.

The mean is computed along two algebraically equal routes (a direct linear
solve and the rank-one-update form above) and the two must agree to 1e-8;
a mismatch signals a numerical problem rather than being silently returned.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Dataset, as_temperature
from .errors import DimensionError, GibbsProbeError, SingularFitError, SpecError
from .probing import EnergyTerm, ProbeFunction

import logging

logger = logging.getLogger(__name__)

PARAMETER_SPACE = "parameter-space"
DATA_SPACE = "data-space"


@dataclass(frozen=True)
class GaussianPosterior:
    """A Gaussian stored as (mean, precision)."""

    mean: np.ndarray
    precision: np.ndarray
    space_tag: str

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        prec = np.array(self.precision, dtype=float)
        if mean.ndim != 1 or prec.shape != (mean.size, mean.size):
            raise DimensionError("mean must be a vector and precision a matching square matrix")
        asym = np.max(np.abs(prec - prec.T), initial=0.0)
        scale = max(1.0, float(np.max(np.abs(prec), initial=0.0)))
        if asym > 1e-10 * scale:
            raise SpecError(f"precision is not symmetric (asymmetry {asym:.2e})")
        prec = 0.5 * (prec + prec.T)
        try:
            np.linalg.cholesky(prec)
        except np.linalg.LinAlgError:
            raise SpecError("precision must be positive definite")
        if self.space_tag not in (PARAMETER_SPACE, DATA_SPACE):
            raise SpecError(f"unknown space tag {self.space_tag!r}")
        mean.setflags(write=False)
        prec.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "precision", prec)

    @property
    def dim(self) -> int:
        return self.mean.size

    def covariance(self) -> np.ndarray:
        return np.linalg.inv(self.precision)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        chol = np.linalg.cholesky(self.covariance())
        return self.mean + rng.standard_normal((n, self.dim)) @ chol.T

    def to_json(self) -> str:
        return json.dumps({
            "mean": self.mean.tolist(),
            "precision": self.precision.tolist(),
            "space_tag": self.space_tag,
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GaussianPosterior":
        doc = json.loads(text)
        return cls(np.asarray(doc["mean"], dtype=float),
                   np.asarray(doc["precision"], dtype=float), doc["space_tag"])


@dataclass(frozen=True)
class LrSummary:
    """Statistical summary of a least-squares fit.

    A is the feature second-moment matrix centered at the data mean; the fit
    ties it to the prediction statistics through the exact identities
    A @ xi_hat = cov_xy and xi_hat . A xi_hat = var_yhat, which are verified
    at construction.
    """

    xbar: np.ndarray
    A: np.ndarray
    xi_hat: np.ndarray
    b_hat: float
    cov_xy: np.ndarray
    var_yhat: float
    mean_yhat: float

    def __post_init__(self):
        for name in ("xbar", "A", "xi_hat", "cov_xy"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        scale = max(1.0, float(np.max(np.abs(self.cov_xy), initial=0.0)))
        if np.max(np.abs(self.A @ self.xi_hat - self.cov_xy), initial=0.0) > 1e-8 * scale:
            raise GibbsProbeError("summary violates A @ xi_hat = cov(X, yhat)")
        vscale = max(1.0, abs(self.var_yhat))
        if abs(float(self.xi_hat @ self.A @ self.xi_hat) - self.var_yhat) > 1e-8 * vscale:
            raise GibbsProbeError("summary violates xi_hat . A xi_hat = var(yhat)")


def _design(data: Dataset) -> tuple[np.ndarray, np.ndarray]:
    if data.y is None:
        raise SpecError("labeled data required")
    return np.column_stack([data.X, np.ones(data.n)]), data.y


def _ols(data: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Return (theta_hat, second-moment matrix D'D/N); raises if rank deficient."""
    D, y = _design(data)
    n = D.shape[0]
    gram = D.T @ D / n
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError:
        raise SingularFitError("design matrix (with constant column) is rank deficient")
    rhs = D.T @ y / n
    theta_hat = np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))
    return theta_hat, gram


def linear_fit_summary(data: Dataset) -> LrSummary:
    """Least-squares fit with the statistics used by the closed forms."""
    theta_hat, gram = _ols(data)
    xi_hat, b_hat = theta_hat[:-1], float(theta_hat[-1])
    xbar = data.X.mean(axis=0)
    A = gram[:-1, :-1] - np.outer(xbar, xbar)
    yhat = data.X @ xi_hat + b_hat
    mean_yhat = float(yhat.mean())
    cov_xy = (data.X - xbar).T @ (yhat - mean_yhat) / data.n
    var_yhat = float(np.mean((yhat - mean_yhat) ** 2))
    return LrSummary(xbar, A, xi_hat, b_hat, cov_xy, var_yhat, mean_yhat)


def lr_parameter_posterior(data: Dataset, tau) -> GaussianPosterior:
    """Gibbs distribution over (coefficients, intercept) at temperature tau:
    N(theta_hat, (D'D / (N tau))^-1)."""
    tau = as_temperature(tau)
    theta_hat, gram = _ols(data)
    precision = gram / tau
    return GaussianPosterior(theta_hat, 0.5 * (precision + precision.T), PARAMETER_SPACE)


def _centered_inverse(data: Dataset, tau: float,
                      jitter: float) -> tuple[LrSummary, np.ndarray, np.ndarray]:
    summary = linear_fit_summary(data)
    A = summary.A
    if jitter > 0:
        logger.info("adding jitter %.1e to the centered moment matrix", jitter)
        A = A + jitter * np.eye(A.shape[0])
    try:
        chol = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise SingularFitError(
            "centered moment matrix is singular; retry with jitter=1e-8")
    A_inv = np.linalg.solve(chol.T, np.linalg.solve(chol, np.eye(A.shape[0])))
    return summary, A, tau * A_inv


def lr_data_posterior(data: Dataset, w: float, tau, jitter: float = 0.0) -> GaussianPosterior:
    """The Gaussian that exp(-G/tau) normalizes to, for G = lr_data_energy.

    The mean follows the shifted-average form; the precision is
    2 (tau A^-1 + xi_hat xi_hat') / tau, i.e. the energy's Hessian divided
    by the temperature.
    """
    tau = as_temperature(tau)
    summary, A, tau_A_inv = _centered_inverse(data, tau, jitter)
    xi = summary.xi_hat
    quad = tau_A_inv + np.outer(xi, xi)

    # route 1: direct solve of the stationarity equation
    f_direct = np.linalg.solve(quad, tau_A_inv @ summary.xbar + xi * (w - summary.b_hat))
    # route 2: rank-one-update closed form. With zero jitter A @ xi is the
    # covariance between features and fitted predictions and xi . A xi their
    # variance, giving the shifted-average expression in those statistics.
    f_shift = summary.xbar + (A @ xi) * (w - summary.mean_yhat) / (tau + float(xi @ A @ xi))
    scale = 1.0 + float(np.max(np.abs(f_shift)))
    if np.max(np.abs(f_direct - f_shift)) > 1e-8 * scale:
        raise GibbsProbeError(
            "mean mismatch between the direct and rank-one-update routes; "
            f"max difference {np.max(np.abs(f_direct - f_shift)):.2e}")

    precision = 2.0 * quad / tau
    return GaussianPosterior(f_shift, 0.5 * (precision + precision.T), DATA_SPACE)


class _LrDataEnergyTerm(EnergyTerm):
    """Expected squared error (z . theta - w)^2 under the parameter Gibbs
    distribution, as an explicit quadratic: (z . theta_hat - w)^2 + z' S z
    with S the parameter covariance and z the feature vector with a trailing 1.
    """

    differentiable = True

    def __init__(self, theta_hat: np.ndarray, param_cov: np.ndarray, w: float):
        self.theta_hat = np.asarray(theta_hat, dtype=float)
        self.param_cov = np.asarray(param_cov, dtype=float)
        self.w = float(w)
        self.dim = self.theta_hat.size - 1

    def evaluate_batch(self, X) -> np.ndarray:
        Z = np.column_stack([X, np.ones(np.asarray(X).shape[0])])
        resid = Z @ self.theta_hat - self.w
        spread = np.einsum("ij,jk,ik->i", Z, self.param_cov, Z)
        return resid ** 2 + spread

    def gradient(self, x) -> np.ndarray:
        z = np.append(np.asarray(x, dtype=float), 1.0)
        resid = float(z @ self.theta_hat - self.w)
        return 2.0 * resid * self.theta_hat[:-1] + 2.0 * (self.param_cov @ z)[:-1]


def lr_data_energy(data: Dataset, w: float, tau) -> ProbeFunction:
    """Quadratic probing energy whose Gibbs distribution at temperature tau
    is exactly lr_data_posterior(data, w, tau)."""
    tau = as_temperature(tau)
    theta_hat, gram = _ols(data)
    param_cov = tau * np.linalg.inv(gram)
    return ProbeFunction([_LrDataEnergyTerm(theta_hat, 0.5 * (param_cov + param_cov.T), w)])
