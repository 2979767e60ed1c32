"""Probing through a latent space.

Instead of sampling the data space directly, sample a lower-dimensional
latent space and push samples through a smooth decoder map. The probing
energy composes with the decoder, and its gradient follows by the chain
rule, so every sampler mode works unchanged. Decoders here are toy maps
(affine, or affine with a tanh squash between two affine stages); that is
enough to exercise the composition machinery without training an
autoencoder.
"""

from __future__ import annotations

import json
from typing import Optional

import numpy as np

from .errors import DimensionError, SpecError
from .probing import EnergyTerm, ProbeFunction


class LatentMap:
    """Smooth map from latent vectors to feature vectors.

    phi(z) = M2 tanh(M1 z + c1) + c2 when a second stage is given,
    else the affine map M1 z + c1. The Jacobian is analytic.
    """

    def __init__(self, m1: np.ndarray, c1: np.ndarray,
                 m2: Optional[np.ndarray] = None, c2: Optional[np.ndarray] = None):
        self.m1 = np.asarray(m1, dtype=float)
        self.c1 = np.asarray(c1, dtype=float)
        if self.m1.ndim != 2 or self.c1.shape != (self.m1.shape[0],):
            raise DimensionError("first stage must be a matrix with a matching offset")
        if (m2 is None) != (c2 is None):
            raise SpecError("second stage needs both a matrix and an offset")
        if m2 is not None:
            self.m2 = np.asarray(m2, dtype=float)
            self.c2 = np.asarray(c2, dtype=float)
            if self.m2.shape[1] != self.m1.shape[0] or self.c2.shape != (self.m2.shape[0],):
                raise DimensionError("second stage shape does not compose with the first")
        else:
            self.m2 = None
            self.c2 = None

    @property
    def latent_dim(self) -> int:
        return self.m1.shape[1]

    @property
    def output_dim(self) -> int:
        return self.m1.shape[0] if self.m2 is None else self.m2.shape[0]

    def __call__(self, z) -> np.ndarray:
        return self.apply_batch(np.asarray(z, dtype=float)[None, :])[0]

    def apply_batch(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        if Z.ndim != 2 or Z.shape[1] != self.latent_dim:
            raise DimensionError(f"expected latent batch of dimension {self.latent_dim}")
        h = Z @ self.m1.T + self.c1
        if self.m2 is None:
            return h
        return np.tanh(h) @ self.m2.T + self.c2

    def jacobian(self, z) -> np.ndarray:
        """d phi / d z at one point, shape (output_dim, latent_dim)."""
        z = np.asarray(z, dtype=float)
        if z.shape != (self.latent_dim,):
            raise DimensionError(f"expected latent vector of dimension {self.latent_dim}")
        if self.m2 is None:
            return self.m1.copy()
        h = self.m1 @ z + self.c1
        return self.m2 @ ((1.0 - np.tanh(h) ** 2)[:, None] * self.m1)

    def to_json(self) -> str:
        doc = {"m1": self.m1.tolist(), "c1": self.c1.tolist(),
               "m2": None if self.m2 is None else self.m2.tolist(),
               "c2": None if self.c2 is None else self.c2.tolist()}
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "LatentMap":
        doc = json.loads(text)
        m2 = None if doc["m2"] is None else np.asarray(doc["m2"], dtype=float)
        c2 = None if doc["c2"] is None else np.asarray(doc["c2"], dtype=float)
        return cls(np.asarray(doc["m1"], dtype=float),
                   np.asarray(doc["c1"], dtype=float), m2, c2)


class _PushforwardTerm(EnergyTerm):
    """One term of the composed energy: term(phi(z))."""

    def __init__(self, inner: EnergyTerm, phi: LatentMap):
        self.inner = inner
        self.phi = phi
        self.dim = phi.latent_dim
        self.differentiable = inner.differentiable

    def evaluate_batch(self, Z) -> np.ndarray:
        return self.inner.evaluate_batch(self.phi.apply_batch(Z))

    def gradient(self, z) -> np.ndarray:
        x = self.phi(z)
        return self.phi.jacobian(z).T @ self.inner.gradient(x)


def pushforward_probe(g: ProbeFunction, phi: LatentMap) -> ProbeFunction:
    """Compose a probing energy with a decoder, yielding an energy over the
    latent space. Sampling it and mapping samples through the decoder gives
    points on the decoder's image."""
    if phi.output_dim != g.dim:
        raise DimensionError(f"decoder outputs dimension {phi.output_dim}, "
                             f"energy expects {g.dim}")
    return ProbeFunction([_PushforwardTerm(term, phi) for term in g.terms])
