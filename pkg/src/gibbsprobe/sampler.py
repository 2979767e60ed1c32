"""Metropolis-adjusted Langevin sampling of probing energies.

Draws from p(x) proportional to exp(-G(x)/tau). Proposals follow the
Euler-Maruyama discretization of the Langevin SDE,

    proposal = x - eta * grad(x) + sqrt(2 * eta * tau) * noise,

and a Metropolis-Hastings correction keeps the chain exactly stationary
for the Gibbs density. The Gaussian transition density of that proposal
rule is q(x'|x) ~ exp(-||x' - x + eta * grad(x)||^2 / (4 * eta * tau)),
and all acceptance arithmetic stays in log space.

Three gradient modes cover every model kind:
  exact     analytic gradients from the probing energy;
  smoothed  Monte-Carlo gradients of the Gaussian-convolved energy, for
            locally-flat (tree-backed) energies; acceptance still uses the
            exact energy values;
  none      zero drift, reducing to a plain Metropolis random walk.

When box bounds are set, proposals are clipped coordinatewise before
evaluation. This perturbs the stationary law near the faces (a
reflecting-boundary style approximation) but guarantees every emitted
sample respects the bounds.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .core import as_temperature
from .errors import DimensionError, NotDifferentiableError, SpecError
from .predictors.base import Predictor
from .probing import EXACT, SMOOTHED, ParamEnsemble, ProbeFunction

logger = logging.getLogger(__name__)

NONE = "none"
GRADIENT_MODES = (EXACT, SMOOTHED, NONE)


@dataclass(frozen=True)
class ChainConfig:
    """MALA hyperparameters.

    smoothing_sigma and smoothing_draws configure the smoothed-gradient
    estimator. smoothing_frozen_reverse reuses the forward gradient estimate
    in the reverse transition density (valid when the energy is locally flat
    and the step size is small); smoothing_corrected switches the estimator
    to the 1/sigma-scaled form of the Gaussian-smoothing gradient identity.
    """

    tau: float
    step_size: float
    n_steps: int
    burn_in: int = 0
    thinning: int = 1
    seed: int = 0
    bounds: Optional[np.ndarray] = None
    gradient_mode: str = EXACT
    smoothing_sigma: float = 0.1
    smoothing_draws: int = 32
    smoothing_frozen_reverse: bool = True
    smoothing_corrected: bool = False

    def __post_init__(self):
        object.__setattr__(self, "tau", as_temperature(self.tau))
        if self.step_size <= 0:
            raise SpecError("step_size must be positive")
        if not (self.n_steps >= self.burn_in >= 0):
            raise SpecError("need n_steps >= burn_in >= 0")
        if self.thinning < 1:
            raise SpecError("thinning must be >= 1")
        if self.gradient_mode not in GRADIENT_MODES:
            raise SpecError(f"gradient_mode must be one of {GRADIENT_MODES}")
        if self.gradient_mode == SMOOTHED:
            if self.smoothing_sigma <= 0:
                raise SpecError("smoothing_sigma must be positive")
            if self.smoothing_draws < 1:
                raise SpecError("smoothing_draws must be >= 1")
        if self.bounds is not None:
            b = np.array(self.bounds, dtype=float)
            if b.ndim != 2 or b.shape[1] != 2:
                raise DimensionError("bounds must have shape (d, 2)")
            if np.any(b[:, 0] > b[:, 1]):
                raise SpecError("bounds must satisfy lo <= hi per feature")
            b.setflags(write=False)
            object.__setattr__(self, "bounds", b)


@dataclass(frozen=True)
class ChainState:
    """Current position with its cached energy and drift gradient."""

    x: np.ndarray
    energy: float
    grad: np.ndarray
    accepted: int = 0
    proposed: int = 0

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        x.setflags(write=False)
        object.__setattr__(self, "x", x)
        g = np.array(self.grad, dtype=float)
        g.setflags(write=False)
        object.__setattr__(self, "grad", g)
        if not (0 <= self.accepted <= self.proposed):
            raise SpecError("need 0 <= accepted <= proposed")

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else 0.0


@dataclass(frozen=True)
class ProbeReport:
    """Generated samples plus population statistics."""

    samples: np.ndarray
    acceptance_rate: float
    feature_names: tuple[str, ...] = ()
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 2:
            raise DimensionError("samples must be a 2-d array")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        if not self.feature_names:
            object.__setattr__(
                self, "feature_names",
                tuple(f"x{i}" for i in range(samples.shape[1])))
        if len(self.feature_names) != samples.shape[1]:
            raise DimensionError("feature_names must match the sample dimension")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def feature_means(self) -> np.ndarray:
        if self.n_samples == 0:
            return np.full(self.samples.shape[1], np.nan)
        return self.samples.mean(axis=0)

    @property
    def feature_stds(self) -> np.ndarray:
        if self.n_samples == 0:
            return np.full(self.samples.shape[1], np.nan)
        return self.samples.std(axis=0)

    def with_stats(self, **stats) -> "ProbeReport":
        merged = dict(self.stats)
        merged.update(stats)
        return ProbeReport(self.samples, self.acceptance_rate, self.feature_names, merged)

    def to_json(self) -> str:
        doc = {
            "acceptance_rate": self.acceptance_rate,
            "n_samples": self.n_samples,
            "feature_names": list(self.feature_names),
            "feature_means": [None if np.isnan(v) else v for v in self.feature_means],
            "feature_stds": [None if np.isnan(v) else v for v in self.feature_stds],
            "stats": self.stats,
            "samples": [list(row) for row in self.samples],
        }
        return json.dumps(doc, sort_keys=True)

    def samples_csv(self) -> str:
        lines = [",".join(self.feature_names)]
        for row in self.samples:
            lines.append(",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"


def smoothed_gradient(g: ProbeFunction, x, sigma_s: float, draws: int,
                      rng: np.random.Generator, corrected: bool = False) -> np.ndarray:
    """Monte-Carlo gradient of the Gaussian-smoothed energy.

    Uses antithetic pairs: each direction eps contributes
    (G(x + sigma*eps) - G(x - sigma*eps)) * eps / 2, so the estimate is
    exactly zero for constant energies. The uncorrected estimator converges
    to sigma times the smoothed-energy gradient (the plain average
    of G(x + sigma*eps) * eps); pass corrected=True to divide by sigma and
    recover the smoothing-identity scale. Only the direction matters for
    proposals; the scale folds into the step size.
    """
    if sigma_s <= 0:
        raise SpecError("sigma_s must be positive")
    if draws < 1:
        raise SpecError("draws must be >= 1")
    x = np.asarray(x, dtype=float)
    eps = rng.standard_normal((draws, x.size))
    values = g.evaluate_batch(np.vstack([x + sigma_s * eps, x - sigma_s * eps]))
    diff = values[:draws] - values[draws:]
    est = (diff[:, None] * eps).sum(axis=0) / (2.0 * draws)
    if corrected:
        est = est / sigma_s
    return est


def _drift_gradient(g: ProbeFunction, x, cfg: ChainConfig,
                    rng: np.random.Generator) -> np.ndarray:
    if cfg.gradient_mode == EXACT:
        return g.gradient(x)
    if cfg.gradient_mode == SMOOTHED:
        return smoothed_gradient(g, x, cfg.smoothing_sigma, cfg.smoothing_draws,
                                 rng, cfg.smoothing_corrected)
    return np.zeros(np.asarray(x).shape)


def init_chain_state(x0, g: ProbeFunction, cfg: ChainConfig,
                     rng: np.random.Generator) -> ChainState:
    x0 = np.asarray(x0, dtype=float)
    if cfg.bounds is not None:
        if cfg.bounds.shape[0] != x0.size:
            raise DimensionError("bounds dimension does not match the start point")
        if np.any(x0 < cfg.bounds[:, 0]) or np.any(x0 > cfg.bounds[:, 1]):
            raise SpecError("start point lies outside the configured bounds")
    energy = g.evaluate(x0)
    if not np.isfinite(energy):
        raise SpecError("start point has non-finite energy")
    return ChainState(x0, energy, _drift_gradient(g, x0, cfg, rng))


def mala_log_transition(source, dest, grad_source, step_size: float, tau: float) -> float:
    """Log density (up to the shared constant) of proposing dest from source."""
    source = np.asarray(source, dtype=float)
    dest = np.asarray(dest, dtype=float)
    resid = dest - source + step_size * np.asarray(grad_source, dtype=float)
    return float(-np.dot(resid, resid) / (4.0 * step_size * tau))


def mala_step(state: ChainState, g: ProbeFunction, cfg: ChainConfig,
              rng: np.random.Generator) -> ChainState:
    """One proposal / accept-reject transition.

    Non-finite proposal energies reject automatically instead of aborting
    the chain. On rejection the position repeats with its cached energy.
    """
    eta, tau = cfg.step_size, cfg.tau
    noise = rng.standard_normal(state.x.size)
    proposal = state.x - eta * state.grad + np.sqrt(2.0 * eta * tau) * noise
    if cfg.bounds is not None:
        proposal = np.clip(proposal, cfg.bounds[:, 0], cfg.bounds[:, 1])

    energy_prop = g.evaluate(proposal)
    if not np.isfinite(energy_prop):
        logger.debug("rejecting proposal with non-finite energy")
        return replace(state, proposed=state.proposed + 1)

    if cfg.gradient_mode == SMOOTHED and cfg.smoothing_frozen_reverse:
        grad_prop = state.grad  # locally-flat assumption: reuse for the reverse density
    else:
        grad_prop = _drift_gradient(g, proposal, cfg, rng)

    log_alpha = ((state.energy - energy_prop) / tau
                 + mala_log_transition(proposal, state.x, grad_prop, eta, tau)
                 - mala_log_transition(state.x, proposal, state.grad, eta, tau))

    u = rng.random()
    if np.log(max(u, 1e-300)) < log_alpha:
        if cfg.gradient_mode == SMOOTHED and cfg.smoothing_frozen_reverse:
            # fresh estimate at the accepted point for the next proposal
            grad_prop = _drift_gradient(g, proposal, cfg, rng)
        return ChainState(proposal, energy_prop, grad_prop,
                          state.accepted + 1, state.proposed + 1)
    return replace(state, proposed=state.proposed + 1)


def run_chain(x0, g: ProbeFunction, cfg: ChainConfig,
              feature_names: tuple[str, ...] = ()) -> ProbeReport:
    """Run one chain; deterministic in (x0, cfg.seed).

    Burn-in states are discarded and the rest thinned, leaving exactly
    (n_steps - burn_in) // thinning samples.
    """
    if cfg.gradient_mode == EXACT and g.gradient_mode != EXACT:
        raise NotDifferentiableError(
            "energy has no exact gradient; use gradient_mode='smoothed' or 'none'")
    rng = np.random.default_rng(cfg.seed)
    state = init_chain_state(x0, g, cfg, rng)
    kept = []
    for step in range(cfg.n_steps):
        state = mala_step(state, g, cfg, rng)
        past_burn_in = step - cfg.burn_in + 1
        if past_burn_in >= 1 and past_burn_in % cfg.thinning == 0:
            kept.append(state.x)
    samples = np.array(kept, dtype=float).reshape(len(kept), np.asarray(x0).size)
    return ProbeReport(samples, state.acceptance_rate, feature_names)


def run_chains(x0, g: ProbeFunction, cfg: ChainConfig, n_chains: int,
               feature_names: tuple[str, ...] = ()) -> ProbeReport:
    """Independent chains with seeds spawned from cfg.seed, merged by chain index."""
    if n_chains < 1:
        raise SpecError("n_chains must be >= 1")
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(cfg.seed).spawn(n_chains)]
    reports = [run_chain(x0, g, replace(cfg, seed=s), feature_names) for s in seeds]
    samples = np.vstack([r.samples for r in reports])
    total_steps = cfg.n_steps * n_chains
    rate = sum(r.acceptance_rate * cfg.n_steps for r in reports) / total_steps if total_steps else 0.0
    return ProbeReport(samples, rate, feature_names)


def run_tree_chain(x0, g: ProbeFunction, cfg: ChainConfig,
                   feature_names: tuple[str, ...] = ()) -> ProbeReport:
    """Chain over a locally-flat (tree-backed) energy.

    Requires smoothed gradient mode: proposals use the Monte-Carlo smoothed
    gradient while acceptance uses exact energy values.
    """
    if cfg.gradient_mode == EXACT:
        raise NotDifferentiableError(
            "tree-backed energies are locally flat; exact-gradient proposals "
            "are undefined. Use gradient_mode='smoothed'.")
    return run_chain(x0, g, cfg, feature_names)


def draw_param_ensemble(p_star: Predictor, sigma_theta: float, m: int,
                        seed: int = 0) -> ParamEnsemble:
    """Draw m Gaussian parameter perturbations around a trained model.

    Each member is theta_star + sigma_theta * standard normal, materialized
    as a predictor of the same family. Tree models carry no flat parameter
    vector and are rejected.
    """
    if sigma_theta < 0:
        raise SpecError("sigma_theta must be nonnegative")
    if m < 1:
        raise SpecError("ensemble size must be >= 1")
    center = p_star.get_params()  # raises NotDifferentiableError for tree models
    rng = np.random.default_rng(seed)
    thetas = center.theta[None, :] + sigma_theta * rng.standard_normal((m, center.size))
    members = tuple(p_star.with_params(t) for t in thetas)
    return ParamEnsemble(p_star, float(sigma_theta), int(seed), thetas, members)
