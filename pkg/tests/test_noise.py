import numpy as np
import pytest
from scipy.linalg import eigh

from stochdr.noise import (
    NoiseSpec,
    compute_mu_field,
    compute_nu,
    empirical_Z,
    path_seed,
    sample_path,
    zero_path,
)
from stochdr.spaces import GelfandTriple, build_grid

from oracles import brute_mu, brute_nu


def test_path_starts_at_zero(grid32):
    p = sample_path(NoiseSpec(seed=5), grid32, 20, 1.0)
    np.testing.assert_array_equal(p.beta[:, 0], 0)
    np.testing.assert_array_equal(p.W[0], 0)
    np.testing.assert_array_equal(p.exp_plus[0], 1)
    np.testing.assert_array_equal(p.exp_minus[0], 1)
    np.testing.assert_allclose(p.exp_plus * p.exp_minus, 1, atol=1e-12)


def test_zero_amplitude(grid32):
    p = sample_path(NoiseSpec(mu0=0.0, seed=5), grid32, 20, 1.0)
    assert np.all(p.W == 0) and np.all(p.mu_field == 0) and p.nu == 0


def test_seed_determinism(grid32):
    a = sample_path(NoiseSpec(seed=42), grid32, 30, 1.0)
    b = sample_path(NoiseSpec(seed=42), grid32, 30, 1.0)
    assert a.W.tobytes() == b.W.tobytes()
    c = sample_path(NoiseSpec(seed=43), grid32, 30, 1.0)
    assert not np.array_equal(a.W, c.W)


def test_path_seeds_are_distinct(grid32):
    spec = NoiseSpec()
    a = sample_path(spec, grid32, 10, 1.0, seed=path_seed(7, 0))
    b = sample_path(spec, grid32, 10, 1.0, seed=path_seed(7, 1))
    a2 = sample_path(spec, grid32, 10, 1.0, seed=path_seed(7, 0))
    assert not np.array_equal(a.W, b.W)
    assert np.array_equal(a.W, a2.W)


def test_rejects_bad_sampling_args(grid32):
    with pytest.raises(ValueError):
        sample_path(NoiseSpec(), grid32, 0, 1.0)
    with pytest.raises(ValueError):
        sample_path(NoiseSpec(), grid32, 10, 0.0)
    with pytest.raises(ValueError):
        NoiseSpec(decay_p=1.5)


def test_W_is_mode_sum(grid32):
    spec = NoiseSpec(J_modes=5, mu0=0.3, seed=9)
    p = sample_path(spec, grid32, 10, 1.0)
    e = np.sqrt(2) * np.sin(np.outer(np.arange(1, 6), np.pi * grid32.nodes))
    mu = 0.3 * np.arange(1, 6) ** -2.0
    np.testing.assert_allclose(p.W, p.beta.T @ (mu[:, None] * e), atol=1e-14)


def test_nu_single_mode():
    assert compute_nu(NoiseSpec(J_modes=1, mu0=1.0), build_grid(32)) == pytest.approx(4.0)


def test_nu_zero_amplitude():
    assert compute_nu(NoiseSpec(mu0=0.0), build_grid(32), "porous") == 0.0


@pytest.mark.parametrize("kind,J", [("standard", 8), ("porous", 4), ("porous", 8)])
def test_nu_matches_dense_oracle(kind, J):
    g = build_grid(32)
    spec = NoiseSpec(J_modes=J, mu0=0.3, decay_p=2.0)
    assert abs(compute_nu(spec, g, kind) - brute_nu(spec, g, kind)) <= 1e-8


def test_mu_field_single_mode(grid32):
    g = build_grid(31)
    mu = compute_mu_field(NoiseSpec(J_modes=1, mu0=1.0), g)
    np.testing.assert_allclose(mu, np.sin(np.pi * g.nodes) ** 2, atol=1e-14)
    assert mu[15] == pytest.approx(1.0)


def test_mu_field_zero(grid32):
    np.testing.assert_array_equal(compute_mu_field(NoiseSpec(mu0=0.0), grid32), 0)


def test_mu_field_brute_sum(grid32):
    spec = NoiseSpec(J_modes=8, mu0=0.2, decay_p=2.0)
    mu = compute_mu_field(spec, grid32)
    np.testing.assert_allclose(mu, brute_mu(spec, grid32), atol=1e-12, rtol=0)
    assert np.all(mu >= 0)


def test_porous_multiplier_norm_is_generalized_eigenvalue():
    from stochdr.noise import multiplier_norm

    g = build_grid(16)
    e = np.sqrt(2) * np.sin(3 * np.pi * g.nodes)
    Linv = np.linalg.inv(g.laplacian.toarray())
    top = eigh(np.diag(e) @ Linv @ np.diag(e), Linv, eigvals_only=True)[-1]
    assert multiplier_norm(e, GelfandTriple(g, "porous")) == pytest.approx(np.sqrt(top), rel=1e-10)


def test_brownian_variance_over_seeds():
    g = build_grid(4)
    spec = NoiseSpec(J_modes=1, mu0=1.0)
    T = 0.7
    ends = np.array([sample_path(spec, g, 4, T, seed=s).beta[0, -1] for s in range(10_000)])
    assert 0.94 * T <= ends.var() <= 1.06 * T


def test_Z_identity_for_zero_noise(grid32):
    p = zero_path(grid32, 10, 1.0)
    np.testing.assert_allclose(empirical_Z(p), 1.0, atol=1e-9)


@pytest.mark.parametrize("kind", ["standard", "porous"])
def test_Z_at_least_one(grid32, kind):
    p = sample_path(NoiseSpec(seed=1, mu0=0.5), grid32, 10, 1.0, kind)
    Z = empirical_Z(p)
    assert np.all(Z >= 1.0)
    assert Z[0] == pytest.approx(1.0, abs=1e-9)


def test_Z_product_rule_bound(grid32):
    p = sample_path(NoiseSpec(seed=2, mu0=0.1), grid32, 20, 1.0)
    Z = empirical_Z(p, samples=64)
    h = grid32.h
    Wpad = np.pad(p.W, ((0, 0), (1, 1)))
    grad = np.abs(np.diff(Wpad, axis=1)).max(axis=1) / h
    C = 1 / np.sqrt(grid32.laplacian.lambda_min)
    bound = np.exp(np.abs(p.W).max(axis=1)) * (1 + C * grad)
    assert np.all(Z <= bound * (1 + 1e-12))
