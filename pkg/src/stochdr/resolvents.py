"""The two resolvents of the splitting, in V-geometry and in H-geometry.

Processes are arrays of shape ``(K+1, n)`` aligned with ``path.t``.

V-geometry (dual map J = L, weighted by e^W)
    stationary:  J X + lam A(t_k) X - lam nu X = J(e^{W_k} v_k),  y = e^{-W} X
    evolution:   e^{-W} J(e^W z) + lam (dz/dt + (mu + nu) z) = e^{-W} J(e^W g)

H-geometry (identity dual map)
    stationary:  (1 - lam nu) U + lam A(t_k) U = e^{W_k} v_k,     u = e^{-W} U
    evolution:   z + lam (dz/dt + (mu + nu) z) = g

Both evolution problems start from z(0) = x0 and use backward Euler.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import LambdaNuTooLargeError, NewtonDivergedError, SingularStepError
from .noise import WienerPath
from .operators import MonotoneOperator
from .spaces import GelfandTriple, Tridiagonal, TripleKind


@dataclass(frozen=True)
class SolverOpts:
    newton_tol: float = 1e-10
    max_newton: int = 50
    damping: float = 0.5
    max_backtrack: int = 30

    def __post_init__(self):
        if not (self.newton_tol > 0 and self.max_newton >= 1 and 0 < self.damping < 1):
            raise ValueError(f"invalid solver options {self}")


def newton_solve(residual, jacobian, norm, x0, opts: SolverOpts, fallback=None,
                 what="Newton"):
    """Batched damped Newton on independent systems stacked along axis 0..-2.

    Each member backtracks on its own residual norm. Members whose line
    search fails take one ``fallback(x, r)`` step instead, if given.
    Returns ``(x, residual_norms, iterations)``.
    """
    x = np.array(x0, dtype=float)
    r = residual(x)
    rn = norm(r)
    for it in range(opts.max_newton + 1):
        active = rn > opts.newton_tol
        if not np.any(active):
            return x, rn, it
        if it == opts.max_newton:
            break
        dx = jacobian(x).solve(-r)
        alpha = np.where(active, 1.0, 0.0)
        pending = active.copy()
        for _ in range(opts.max_backtrack):
            x_try = x + alpha[..., None] * dx
            r_try = residual(x_try)
            rn_try = norm(r_try)
            good = pending & np.isfinite(rn_try) & (rn_try <= (1 - 1e-4 * alpha) * rn)
            x = np.where(good[..., None], x_try, x)
            r = np.where(good[..., None], r_try, r)
            rn = np.where(good, rn_try, rn)
            pending &= ~good
            if not np.any(pending):
                break
            alpha = np.where(pending, alpha * opts.damping, alpha)
        if np.any(pending) and fallback is not None:
            x_fb = x + fallback(x, r)
            r_fb = residual(x_fb)
            rn_fb = norm(r_fb)
            take = pending & np.isfinite(rn_fb) & (rn_fb < rn)
            x = np.where(take[..., None], x_fb, x)
            r = np.where(take[..., None], r_fb, r)
            rn = np.where(take, rn_fb, rn)
    bad = np.flatnonzero(np.ravel(rn > opts.newton_tol))
    raise NewtonDivergedError(
        f"{what}: residual {float(np.max(rn)):.3e} above {opts.newton_tol:.1e} "
        f"after {opts.max_newton} iterations", residual=rn, index=bad)


def _check_lambda(lam):
    if not lam > 0:
        raise ValueError("lambda must be positive")


def _check_op(op: MonotoneOperator, path: WienerPath):
    if op.triple.kind is not path.triple.kind or op.grid.n != path.grid.n:
        raise ValueError(f"operator on {op.triple} does not match path on {path.triple}")


# V-geometry ---------------------------------------------------------------

def resolvent_A_star(op: MonotoneOperator, path: WienerPath, lam: float, v: np.ndarray,
                     opts: SolverOpts | None = None, guess: np.ndarray | None = None,
                     nu: float | None = None, full_output: bool = False):
    """y = (I + lam A*)^{-1} v, solved independently at every time node.

    ``guess`` is a starting y (e.g. the previous splitting iterate).
    With ``full_output`` also returns the per-node V' residual norms.
    """
    _check_lambda(lam)
    _check_op(op, path)
    opts = opts or SolverOpts()
    nu = path.nu if nu is None else nu
    tr = op.triple
    E, t = path.exp_plus, path.t
    rhs = tr.duality_map(E * v)
    Jtri = tr.duality_tridiagonal()

    def residual(X):
        return tr.duality_map(X) + lam * (op.apply(t, X) - nu * X) - rhs

    def jacobian(X):
        return op.jacobian(t, X).scale(np.full(X.shape[:-1], lam)).add_diagonal(-lam * nu) + Jtri

    rho = 1.0 / (1.0 + lam * op.constants.gamma1)

    def fallback(X, r):
        return -rho * tr.inverse_duality(r)

    X0 = E * (v if guess is None else guess)
    X, res, _ = newton_solve(residual, jacobian, tr.norm_Vdual, X0, opts, fallback,
                             what="stationary resolvent")
    y = path.exp_minus * X
    return (y, res) if full_output else y


def stationary_residual(op, path, lam, v, y, nu=None) -> np.ndarray:
    """Per-node V' norm of J X + lam (A X - nu X) - J(e^W v) at X = e^W y."""
    nu = path.nu if nu is None else nu
    tr = op.triple
    X = path.exp_plus * y
    r = tr.duality_map(X) + lam * (op.apply(path.t, X) - nu * X) - tr.duality_map(path.exp_plus * v)
    return tr.norm_Vdual(r)


class EvolutionResolvent:
    """(I + lam B*)^{-1} for a fixed path and lambda.

    The backward-Euler step matrices
    ``D_{e^{-W_k}} L D_{e^{W_k}} + (lam/dt + lam nu) I + lam diag(mu)``
    are assembled once and reused across splitting iterations.
    """

    def __init__(self, path: WienerPath, lam: float, triple: GelfandTriple | None = None,
                 nu: float | None = None):
        _check_lambda(lam)
        self.path = path
        self.lam = lam
        self.triple = triple or path.triple
        self.nu = path.nu if nu is None else nu
        c = lam / path.dt
        L = self.triple.duality_tridiagonal()
        self._ab = []
        for k in range(1, path.K + 1):
            M = (L.scale_rows(path.exp_minus[k]).scale_cols(path.exp_plus[k])
                 .add_diagonal(c + lam * self.nu + lam * path.mu_field))
            ab = M.banded()
            if not np.all(ab[1] > 0):
                raise SingularStepError(f"nonpositive pivot in step matrix {k}")
            self._ab.append(ab)

    def conjugated_duality(self, u: np.ndarray, nodes=slice(None)) -> np.ndarray:
        """e^{-W} J (e^W u), applied node by node (``nodes`` selects the time rows)."""
        p = self.path
        return p.exp_minus[nodes] * self.triple.duality_map(p.exp_plus[nodes] * u)

    def __call__(self, x0: np.ndarray, g: np.ndarray) -> np.ndarray:
        p = self.path
        c = self.lam / p.dt
        rhs = self.conjugated_duality(g)
        z = np.empty_like(rhs)
        z[0] = x0
        for k in range(1, p.K + 1):
            z[k] = solve_banded((1, 1), self._ab[k - 1], rhs[k] + c * z[k - 1],
                                check_finite=False)
        return z

    def residual(self, x0, g, z) -> np.ndarray:
        """V' norms of the step equations (index 0 holds |z_0 - x0|_V)."""
        p, lam = self.path, self.lam
        lhs = self.conjugated_duality(z[1:], slice(1, None)) + lam * (
            (z[1:] - z[:-1]) / p.dt + (self.nu + p.mu_field) * z[1:])
        out = np.empty(p.K + 1)
        out[0] = float(self.triple.norm_V(z[0] - x0))
        out[1:] = self.triple.norm_Vdual(lhs - self.conjugated_duality(g[1:], slice(1, None)))
        return out


def resolvent_B_star(path: WienerPath, lam: float, x0: np.ndarray, g: np.ndarray,
                     opts: SolverOpts | None = None, nu: float | None = None) -> np.ndarray:
    """z = (I + lam B*)^{-1} g with z(0) = x0 (one tridiagonal solve per step)."""
    return EvolutionResolvent(path, lam, nu=nu)(x0, g)


# H-geometry ---------------------------------------------------------------

def _check_lambda_nu(lam, nu):
    _check_lambda(lam)
    if lam * nu >= 1:
        raise LambdaNuTooLargeError(f"lambda*nu = {lam * nu:.3g} must be < 1")


def resolvent_A1_star(op: MonotoneOperator, path: WienerPath, lam: float, v: np.ndarray,
                      opts: SolverOpts | None = None, guess: np.ndarray | None = None,
                      nu: float | None = None, full_output: bool = False):
    """u = (I + lam A1*)^{-1} v in the H = L^2 geometry.

    Requires an operator on the STANDARD triple, whose V' coordinates
    coincide with nodal L^2 values.
    """
    nu = path.nu if nu is None else nu
    _check_lambda_nu(lam, nu)
    _check_op(op, path)
    if op.triple.kind is not TripleKind.STANDARD:
        raise ValueError("the H-geometry scheme needs H = L^2 (STANDARD triple)")
    opts = opts or SolverOpts()
    tr = op.triple
    t = path.t
    rhs = path.exp_plus * v
    a = 1.0 - lam * nu

    def residual(U):
        return a * U + lam * op.apply(t, U) - rhs

    def jacobian(U):
        return op.jacobian(t, U).scale(np.full(U.shape[:-1], lam)).add_diagonal(a)

    U0 = path.exp_plus * (v if guess is None else guess)
    U, res, _ = newton_solve(residual, jacobian, tr.norm_H, U0, opts,
                             what="H-geometry stationary resolvent")
    u = path.exp_minus * U
    return (u, res) if full_output else u


def stationary_residual_H(op, path, lam, v, u, nu=None) -> np.ndarray:
    nu = path.nu if nu is None else nu
    U = path.exp_plus * u
    r = (1.0 - lam * nu) * U + lam * op.apply(path.t, U) - path.exp_plus * v
    return op.triple.norm_H(r)


def resolvent_B1_star(path: WienerPath, lam: float, x0: np.ndarray, g: np.ndarray,
                      nu: float | None = None) -> np.ndarray:
    """Backward Euler for z + lam (dz/dt + (mu + nu) z) = g, diagonal per node."""
    _check_lambda(lam)
    nu = path.nu if nu is None else nu
    c = lam / path.dt
    a = 1.0 + lam * nu + lam * path.mu_field + c
    z = np.empty_like(np.asarray(g, dtype=float))
    z[0] = x0
    for k in range(1, path.K + 1):
        z[k] = (g[k] + c * z[k - 1]) / a
    return z


def evolution_residual_H(path, lam, x0, g, z, nu=None) -> np.ndarray:
    """Pointwise max residual of each backward-Euler step (index 0: initial value)."""
    nu = path.nu if nu is None else nu
    r = z[1:] + lam * ((z[1:] - z[:-1]) / path.dt + (nu + path.mu_field) * z[1:]) - g[1:]
    out = np.empty(path.K + 1)
    out[0] = float(np.max(np.abs(z[0] - x0)))
    out[1:] = np.max(np.abs(r), axis=1)
    return out
