"""Synthetic dataset generators.

Deterministic desk-scale generators: toy geometries (circles, blobs, xor)
plus tabular stand-ins used when the real credit/wine CSVs are not
available. Every generator is a pure function of its arguments and seed;
regeneration is bit-identical.
"""

from __future__ import annotations

import numpy as np

from .core import Dataset
from .errors import SpecError


def concentric_circles(n_per_class: int = 200, r_inner: float = 1.0, r_outer: float = 2.0,
                       noise_sd: float = 0.1, seed: int = 0) -> Dataset:
    """Two classes on concentric circles: class 0 at the inner radius, class 1 at the outer."""
    if not (0 < r_inner < r_outer):
        raise SpecError(f"need 0 < r_inner < r_outer, got {r_inner}, {r_outer}")
    if noise_sd < 0:
        raise SpecError("noise_sd must be nonnegative")
    rng = np.random.default_rng(seed)
    pts, labels = [], []
    for cls, radius in ((0, r_inner), (1, r_outer)):
        angles = rng.uniform(0.0, 2.0 * np.pi, n_per_class)
        radii = radius + noise_sd * rng.standard_normal(n_per_class)
        pts.append(np.column_stack([radii * np.cos(angles), radii * np.sin(angles)]))
        labels.append(np.full(n_per_class, cls))
    return Dataset(np.vstack(pts), np.concatenate(labels), ("x0", "x1"), n_classes=2)


def gaussian_blobs(n_per_class: int = 100, centers=((-2.0, 0.0), (2.0, 0.0)),
                   spread: float = 0.6, seed: int = 0) -> Dataset:
    """Isotropic Gaussian blobs, one per class."""
    rng = np.random.default_rng(seed)
    centers = np.asarray(centers, dtype=float)
    pts, labels = [], []
    for cls, center in enumerate(centers):
        pts.append(center + spread * rng.standard_normal((n_per_class, centers.shape[1])))
        labels.append(np.full(n_per_class, cls))
    names = tuple(f"x{i}" for i in range(centers.shape[1]))
    return Dataset(np.vstack(pts), np.concatenate(labels), names, n_classes=len(centers))


def xor(n: int = 400, seed: int = 0, noise_sd: float = 0.35) -> Dataset:
    """The xor quadrant problem: label 1 iff the two coordinates have opposite signs."""
    rng = np.random.default_rng(seed)
    signs = rng.choice([-1.0, 1.0], size=(n, 2))
    X = signs + noise_sd * rng.standard_normal((n, 2))
    y = (signs[:, 0] * signs[:, 1] < 0).astype(float)
    return Dataset(X, y, ("x0", "x1"), n_classes=2)


CREDIT_FEATURES = (
    "utilization",
    "num_accounts",
    "delinquencies_2yr",
    "credit_age_years",
    "inquiries_6mo",
    "debt_to_income",
    "monthly_income",
    "num_open_trades",
)

# Coefficients of the generative risk score (positive = raises the odds of
# label 1, "bad risk"). The logit is monotone in every feature by design.
_CREDIT_COEF = np.array([3.0, 0.05, 0.9, -0.12, 0.55, 2.4, -0.30, 0.04])
_CREDIT_INTERCEPT = -1.3


def synthetic_credit(n: int = 5000, seed: int = 0) -> Dataset:
    """Credit-risk stand-in: two applicant segments with a monotone risk logit.

    Features come from a two-component Gaussian mixture (a prime and a
    subprime segment), and the binary label is drawn from a logistic model
    of the features, so any calibrated classifier can recover real signal.
    Label 1 means "bad risk".
    """
    rng = np.random.default_rng(seed)
    seg = (rng.random(n) < 0.45).astype(float)  # 1 = subprime segment

    def seg_normal(base, shift, sd):
        return base + shift * seg + sd * rng.standard_normal(n)

    cols = np.column_stack([
        np.clip(seg_normal(0.25, 0.35, 0.18), 0.0, 1.2),        # utilization
        np.clip(seg_normal(7.0, 2.0, 3.0), 0.0, 30.0),          # num_accounts
        np.clip(seg_normal(0.4, 1.4, 1.0), 0.0, 12.0),          # delinquencies_2yr
        np.clip(seg_normal(15.0, -3.5, 5.0), 0.5, 40.0),        # credit_age_years
        np.clip(seg_normal(1.0, 1.5, 1.2), 0.0, 12.0),          # inquiries_6mo
        np.clip(seg_normal(0.28, 0.15, 0.10), 0.0, 1.0),        # debt_to_income
        np.clip(seg_normal(5.8, -0.8, 1.5), 0.5, 20.0),         # monthly_income
        np.clip(seg_normal(5.0, 1.5, 2.0), 0.0, 25.0),          # num_open_trades
    ])
    logit = cols @ _CREDIT_COEF + _CREDIT_INTERCEPT
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-logit))).astype(float)
    return Dataset(cols, y, CREDIT_FEATURES, n_classes=2)


WINE_FEATURES = (
    "alcohol",
    "malic_acid",
    "ash",
    "alcalinity_of_ash",
    "magnesium",
    "total_phenols",
    "flavanoids",
    "nonflavanoid_phenols",
    "proanthocyanins",
    "color_intensity",
    "hue",
    "od280_od315",
    "proline",
)

# Class-conditional means and standard deviations approximating the classic
# wine recognition data (three cultivars, 13 chemical measurements).
_WINE_MEANS = np.array([
    [13.74, 2.01, 2.46, 17.04, 106.34, 2.84, 2.98, 0.29, 1.90, 5.53, 1.06, 3.16, 1115.7],
    [12.28, 1.93, 2.45, 20.24, 94.55, 2.26, 2.08, 0.36, 1.63, 3.09, 1.06, 2.78, 519.5],
    [13.15, 3.33, 2.44, 21.42, 99.31, 1.68, 0.78, 0.45, 1.15, 7.40, 0.68, 1.68, 629.9],
])
_WINE_SDS = np.array([
    [0.46, 0.69, 0.23, 2.55, 10.50, 0.34, 0.40, 0.07, 0.41, 1.24, 0.12, 0.36, 221.5],
    [0.54, 1.02, 0.32, 3.35, 16.75, 0.55, 0.71, 0.12, 0.60, 0.92, 0.20, 0.50, 157.2],
    [0.53, 1.09, 0.18, 2.26, 10.89, 0.36, 0.29, 0.12, 0.41, 2.31, 0.11, 0.27, 115.1],
])


def synthetic_wine(n_per_class: int = 60, seed: int = 0) -> Dataset:
    """Wine-like 13-feature, 3-class data from class-conditional Gaussians."""
    rng = np.random.default_rng(seed)
    pts, labels = [], []
    for cls in range(3):
        block = _WINE_MEANS[cls] + _WINE_SDS[cls] * rng.standard_normal((n_per_class, 13))
        pts.append(np.maximum(block, 0.0))
        labels.append(np.full(n_per_class, cls))
    return Dataset(np.vstack(pts), np.concatenate(labels), WINE_FEATURES, n_classes=3)


def gaussian_regression(n: int = 2000, dim: int = 4, coef=None, intercept: float = 0.5,
                        noise_sd: float = 0.5, seed: int = 0) -> Dataset:
    """Standard-normal features with a linear-Gaussian response."""
    rng = np.random.default_rng(seed)
    if coef is None:
        coef = np.linspace(1.0, -0.5, dim)
    coef = np.asarray(coef, dtype=float)
    if coef.shape != (dim,):
        raise SpecError("coef must have one entry per feature")
    X = rng.standard_normal((n, dim))
    y = X @ coef + intercept + noise_sd * rng.standard_normal(n)
    return Dataset(X, y, tuple(f"x{i}" for i in range(dim)))


GENERATORS = {
    "concentric_circles": concentric_circles,
    "gaussian_blobs": gaussian_blobs,
    "xor": xor,
    "synthetic_credit": synthetic_credit,
    "synthetic_wine": synthetic_wine,
    "gaussian_regression": gaussian_regression,
}


def make_dataset(name: str, **kwargs) -> Dataset:
    """Build a dataset from a named generator recipe."""
    if name not in GENERATORS:
        raise SpecError(f"unknown generator {name!r}; available: {sorted(GENERATORS)}")
    return GENERATORS[name](**kwargs)
