import numpy as np
import pytest

from gibbsprobe.errors import DimensionError
from gibbsprobe.latent import LatentMap, pushforward_probe
from gibbsprobe.probing import AnchorRegularizer, ProbeFunction
from gibbsprobe.sampler import ChainConfig, run_chain


def fd_gradient(fn, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        grad[i] = (fn(x + e) - fn(x - e)) / (2 * h)
    return grad


def quadratic_about(point, lam=0.5):
    return ProbeFunction([AnchorRegularizer(np.asarray(point, float), lam=lam, r=2.0)])


def test_identity_pushforward_is_same_energy():
    g = quadratic_about([1.0, -1.0])
    phi = LatentMap(np.eye(2), np.zeros(2))
    h = pushforward_probe(g, phi)
    rng = np.random.default_rng(0)
    for _ in range(20):
        z = rng.standard_normal(2)
        assert h.evaluate(z) == pytest.approx(g.evaluate(z), abs=1e-12)
        np.testing.assert_allclose(h.gradient(z), g.gradient(z), atol=1e-12)


def test_affine_map_jacobian_vs_finite_differences():
    rng = np.random.default_rng(1)
    m1 = rng.standard_normal((4, 2))
    c1 = rng.standard_normal(4)
    phi = LatentMap(m1, c1)
    z = rng.standard_normal(2)
    np.testing.assert_allclose(phi.jacobian(z), m1, atol=1e-12)


def test_tanh_map_jacobian_vs_finite_differences():
    rng = np.random.default_rng(2)
    phi = LatentMap(rng.standard_normal((5, 3)), rng.standard_normal(5),
                    rng.standard_normal((4, 5)), rng.standard_normal(4))
    for _ in range(100):
        z = rng.uniform(-2, 2, size=3)
        jac = phi.jacobian(z)
        for k in range(4):
            numeric = fd_gradient(lambda p, k=k: phi(p)[k], z)
            assert np.linalg.norm(jac[k] - numeric) <= 1e-5 * max(1.0, np.linalg.norm(numeric))


def test_pushforward_chain_rule_vs_finite_differences():
    rng = np.random.default_rng(3)
    phi = LatentMap(rng.standard_normal((4, 2)), rng.standard_normal(4),
                    rng.standard_normal((3, 4)), rng.standard_normal(3))
    g = quadratic_about([0.2, -0.5, 1.0])
    h = pushforward_probe(g, phi)
    for _ in range(100):
        z = rng.uniform(-2, 2, size=2)
        numeric = fd_gradient(h.evaluate, z)
        assert np.linalg.norm(h.gradient(z) - numeric) <= 1e-4 * max(1.0, np.linalg.norm(numeric))


def test_affine_quadratic_pushforward_closed_form():
    """phi affine, G quadratic: H(z) = lam ||M z + c - a||^2 is quadratic with
    minimum at the least-squares preimage; the chain's samples pushed through
    phi must center on the projection of the target onto the affine image."""
    rng = np.random.default_rng(4)
    m = rng.standard_normal((3, 2))
    c = rng.standard_normal(3)
    target = rng.standard_normal(3)
    lam = 2.0
    phi = LatentMap(m, c)
    g = quadratic_about(target, lam=lam)
    h = pushforward_probe(g, phi)

    z_star, *_ = np.linalg.lstsq(m, target - c, rcond=None)
    tau = 0.05
    cfg = ChainConfig(tau=tau, step_size=0.02, n_steps=30000, burn_in=3000, seed=9)
    report = run_chain(z_star.copy(), h, cfg)
    # latent mean matches the least-squares preimage
    batches = np.array_split(report.samples, 40)
    means = np.array([b.mean(axis=0) for b in batches])
    se = means.std(axis=0, ddof=1) / np.sqrt(40)
    assert np.all(np.abs(report.samples.mean(axis=0) - z_star) <= 4 * se)
    # analytic latent covariance: H = lam (Mz + c - a)' (Mz + c - a), Gibbs law
    # at temperature tau is N(z*, tau/(2 lam) (M'M)^-1)
    target_cov = tau / (2 * lam) * np.linalg.inv(m.T @ m)
    emp = np.cov(report.samples.T)
    assert np.linalg.norm(emp - target_cov) / np.linalg.norm(target_cov) <= 0.15


def test_pushed_samples_lie_on_the_plane():
    """2d -> 3d embedding: every pushed sample sits exactly on the image
    plane and the sample cloud centers at the orthogonal projection of the
    off-plane target."""
    m = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])  # the z = 0 plane
    c = np.zeros(3)
    target = np.array([0.3, -0.7, 2.0])  # off the plane
    phi = LatentMap(m, c)
    g = quadratic_about(target, lam=1.0)
    h = pushforward_probe(g, phi)
    cfg = ChainConfig(tau=0.02, step_size=0.01, n_steps=20000, burn_in=2000, seed=2)
    report = run_chain(np.zeros(2), h, cfg)
    pushed = report.samples @ m.T + c
    assert np.max(np.abs(pushed[:, 2])) < 1e-10  # exactly in the plane
    projection = np.array([0.3, -0.7, 0.0])
    assert np.linalg.norm(pushed.mean(axis=0) - projection) <= 0.05


def test_dimension_mismatch_rejected():
    g = quadratic_about([0.0, 0.0])
    phi = LatentMap(np.eye(3), np.zeros(3))
    with pytest.raises(DimensionError):
        pushforward_probe(g, phi)


def test_latent_map_serialization():
    rng = np.random.default_rng(5)
    phi = LatentMap(rng.standard_normal((3, 2)), rng.standard_normal(3),
                    rng.standard_normal((4, 3)), rng.standard_normal(4))
    clone = LatentMap.from_json(phi.to_json())
    z = rng.standard_normal(2)
    np.testing.assert_array_equal(phi(z), clone(z))
    affine = LatentMap(np.eye(2), np.ones(2))
    clone2 = LatentMap.from_json(affine.to_json())
    assert clone2.m2 is None
    np.testing.assert_array_equal(affine(z), clone2(z))
