import time

import numpy as np
import pytest

from stochdr.noise import zero_path
from stochdr.operators import QuasilinearOperator, laplacian_operator, shift_operator
from stochdr.reference import reference_solve, residual_certificate
from stochdr.resolvents import SolverOpts
from stochdr.spaces import build_grid
from stochdr.splitting import dr_solve


def test_zero_initial_datum(quasi_shifted, noisy_path):
    ref = reference_solve(quasi_shifted, noisy_path, np.zeros(32))
    np.testing.assert_array_equal(ref.y, 0)


def test_heat_kernel():
    g = build_grid(64)
    p = zero_path(g, 200, 0.1)
    ref = reference_solve(laplacian_operator(g), p, g.sine(1))
    exact = np.exp(-np.pi**2 * p.t)[:, None] * g.sine(1)
    assert np.abs(ref.X - exact).max() <= 1e-2


def test_first_order_self_convergence():
    """Successive differences over dt, dt/2, dt/4 shrink by about 2."""
    g = build_grid(16)
    op = shift_operator(QuasilinearOperator(g), 0.0)
    x0 = 2 * g.sine(1)
    X = [reference_solve(op, zero_path(g, K, 0.5), x0).X for K in (40, 80, 160)]
    coarse = [x[:: 2**i] for i, x in enumerate(X)]
    tr = op.triple
    e1 = np.sqrt(np.sum(tr.norm_V(coarse[0] - coarse[1]) ** 2))
    e2 = np.sqrt(np.sum(tr.norm_V(coarse[1] - coarse[2]) ** 2))
    assert 1.7 <= e1 / e2 <= 2.3


def test_certificate_of_reference(quasi_shifted, noisy_path):
    opts = SolverOpts(newton_tol=1e-10)
    ref = reference_solve(quasi_shifted, noisy_path, noisy_path.grid.sine(1), opts)
    cert = residual_certificate(quasi_shifted, noisy_path, ref.X)
    assert cert.shape == (50,)
    assert cert.max() <= opts.newton_tol


def test_certificate_is_locally_lipschitz(quasi_shifted, noisy_path, rng):
    ref = reference_solve(quasi_shifted, noisy_path, noisy_path.grid.sine(1))
    P = rng.standard_normal(ref.X.shape)
    P[0] = 0
    d3 = residual_certificate(quasi_shifted, noisy_path, ref.X + 1e-3 * P).max()
    d4 = residual_certificate(quasi_shifted, noisy_path, ref.X + 1e-4 * P).max()
    assert 10 / 5 <= d3 / d4 <= 10 * 5


def test_certificate_of_converged_splitting(quasi_shifted, noisy_path):
    x0 = noisy_path.grid.sine(1)
    res = dr_solve(quasi_shifted, noisy_path, x0, 0.5, N_max=300, stop_tol=1e-9)
    assert res.converged
    assert residual_certificate(quasi_shifted, noisy_path, res.X).max() <= 100 * 1e-9


def test_reference_is_fast():
    g = build_grid(64)
    p = zero_path(g, 200, 0.1)
    t0 = time.perf_counter()
    reference_solve(shift_operator(QuasilinearOperator(g), 0.0), p, g.sine(1))
    assert time.perf_counter() - t0 < 5.0


@pytest.mark.parametrize("kind", ["standard", "porous"])
def test_reference_linear_matches_direct_solve(kind):
    g = build_grid(12)
    p = zero_path(g, 10, 0.2, kind)
    ref = reference_solve(laplacian_operator(g, kind), p, g.sine(2))
    M = np.eye(12) / p.dt + g.laplacian.toarray()
    y = g.sine(2)
    for k in range(1, 11):
        y = np.linalg.solve(M, y / p.dt)
        np.testing.assert_allclose(ref.y[k], y, atol=1e-10)
