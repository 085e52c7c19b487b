"""Douglas-Rachford iterations for B y + A y = 0 on one noise path.

V-geometry scheme::

    y_n     = (I + lam A*)^{-1} v_n
    z_{n+1} = (I + lam B*)^{-1} (2 y_n - v_n)
    v_{n+1} = z_{n+1} + v_n - y_n

with X_n = e^W y_n approximating the solution of dX + A(t) X dt = X dW.
The same recursion with the H-geometry resolvents gives the scheme for
operators that are maximal monotone in H x H.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .noise import WienerPath
from .operators import MonotoneOperator
from .resolvents import (
    EvolutionResolvent,
    SolverOpts,
    _check_lambda_nu,
    resolvent_A1_star,
    resolvent_A_star,
    resolvent_B1_star,
)


@dataclass
class IterationRecord:
    n: int
    dv_norm: float
    errV: float = float("nan")
    errH: float = float("nan")
    max_residual: float = 0.0


@dataclass
class DRState:
    """Iteration variables after ``n`` completed steps.

    ``v`` is v_n; ``y`` and ``z`` are y_{n-1} and z_n from the last step,
    and ``v_prev`` is v_{n-1}, so that v = z + v_prev - y holds.
    """

    n: int
    v: np.ndarray
    lam: float
    y: np.ndarray | None = None
    z: np.ndarray | None = None
    v_prev: np.ndarray | None = None
    history: list[IterationRecord] = field(default_factory=list)


@dataclass
class HDRState(DRState):
    """H-geometry state; ``z`` holds z~_n.  Y_n = e^W z~_n, V_n = e^W v_n."""

    exp_plus: np.ndarray | None = None

    @property
    def Y(self):
        return None if self.z is None else self.exp_plus * self.z

    @property
    def V(self):
        return self.exp_plus * self.v


@dataclass
class SplitResult:
    X: np.ndarray
    y: np.ndarray
    state: DRState
    converged: bool
    wall_time: float

    @property
    def history(self) -> list[IterationRecord]:
        return self.state.history

    @property
    def iterations(self) -> int:
        return self.state.n

    @property
    def status(self) -> str:
        return "converged" if self.converged else "max_iters"


class DouglasRachford:
    """V-geometry splitting for one operator, path, initial datum and lambda."""

    geometry = "V"

    def __init__(self, op: MonotoneOperator, path: WienerPath, x0: np.ndarray, lam: float,
                 opts: SolverOpts | None = None):
        self.op = op
        self.path = path
        self.x0 = np.asarray(x0, dtype=float)
        self.lam = lam
        self.opts = opts or SolverOpts()
        self._setup()

    def _setup(self):
        self.evolution = EvolutionResolvent(self.path, self.lam)

    def norm(self, u) -> float:
        return self.path.norm_V(u)

    def resolvent_A(self, v, guess=None):
        return resolvent_A_star(self.op, self.path, self.lam, v, self.opts, guess=guess,
                                full_output=True)

    def resolvent_B(self, g):
        return self.evolution(self.x0, g)

    def initial_state(self, v0=None) -> DRState:
        v = self.path.lift(self.x0) if v0 is None else np.array(v0, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("v0 has non-finite entries")
        return DRState(0, v, self.lam)

    def step(self, state: DRState, y_ref: np.ndarray | None = None) -> DRState:
        y, res = self.resolvent_A(state.v, guess=state.y)
        z = self.resolvent_B(2.0 * y - state.v)
        v_new = z + state.v - y
        rec = IterationRecord(state.n, self.norm(v_new - state.v), max_residual=float(np.max(res)))
        if y_ref is not None:
            d = y - y_ref
            rec.errV = self.path.norm_V(d)
            rec.errH = self.path.norm_H(d)
        state.history.append(rec)
        return type(state)(state.n + 1, v_new, state.lam, y, z, state.v, state.history,
                           **self._extra())

    def _extra(self):
        return {}

    def solve(self, v0=None, N_max: int = 200, stop_tol: float = 1e-8,
              y_ref: np.ndarray | None = None) -> SplitResult:
        t0 = time.perf_counter()
        state = self.initial_state(v0)
        converged = False
        while state.n < N_max:
            state = self.step(state, y_ref)
            if state.history[-1].dv_norm <= stop_tol:
                converged = True
                break
        y, _ = self.resolvent_A(state.v, guess=state.y)
        return SplitResult(self.path.exp_plus * y, y, state, converged,
                           time.perf_counter() - t0)


class HilbertDouglasRachford(DouglasRachford):
    """H-geometry splitting (identity dual map, requires lam * nu < 1)."""

    geometry = "H"

    def _setup(self):
        _check_lambda_nu(self.lam, self.path.nu)

    def norm(self, u) -> float:
        return self.path.norm_H(u)

    def resolvent_A(self, v, guess=None):
        return resolvent_A1_star(self.op, self.path, self.lam, v, self.opts, guess=guess,
                                 full_output=True)

    def resolvent_B(self, g):
        return resolvent_B1_star(self.path, self.lam, self.x0, g)

    def initial_state(self, v0=None) -> HDRState:
        s = super().initial_state(v0)
        return HDRState(0, s.v, self.lam, exp_plus=self.path.exp_plus)

    def _extra(self):
        return {"exp_plus": self.path.exp_plus}


def dr_step(state: DRState, op, path, x0, opts=None, y_ref=None) -> DRState:
    return DouglasRachford(op, path, x0, state.lam, opts).step(state, y_ref)


def dr_solve(op, path, x0, lam, v0=None, N_max=200, stop_tol=1e-8, opts=None,
             y_ref=None) -> SplitResult:
    """Iterate until |v_{n+1} - v_n| <= stop_tol in the weighted V-norm.

    The returned X is e^W (I + lam A*)^{-1} v at the last v.  When
    ``y_ref`` (a reference solution of the transformed equation) is given,
    the history also records the distance of each iterate to it.
    """
    return DouglasRachford(op, path, x0, lam, opts).solve(v0, N_max, stop_tol, y_ref)


def h_dr_solve(op, path, x0, lam, v0=None, N_max=500, stop_tol=1e-7, opts=None,
               y_ref=None) -> SplitResult:
    """H-geometry variant; successive differences measured in the weighted H-norm."""
    return HilbertDouglasRachford(op, path, x0, lam, opts).solve(v0, N_max, stop_tol, y_ref)


def gamma_map(op: MonotoneOperator, path: WienerPath, x0, lam, X: np.ndarray,
              opts: SolverOpts | None = None, evolution: EvolutionResolvent | None = None):
    """One application of the fixed-point map X_n -> X_{n+1} in X-coordinates.

    First the linear problem driven by F_n = (J + lam nu - lam A) X_n is
    solved in its transformed form, then the stationary equation
    J X' + lam (A - nu) X' = J Z + lam (A - nu) X_n.
    """
    tr = op.triple
    nu = path.nu
    t = path.t
    evolution = evolution or EvolutionResolvent(path, lam)
    AX = op.apply(t, X)
    F = tr.duality_map(X) - lam * AX + lam * nu * X
    z = evolution(x0, path.exp_minus * tr.inverse_duality(F))
    Z = path.exp_plus * z
    rhs = tr.duality_map(Z) + lam * (AX - nu * X)
    v = path.exp_minus * tr.inverse_duality(rhs)
    y = resolvent_A_star(op, path, lam, v, opts, guess=path.exp_minus * X)
    return path.exp_plus * y
