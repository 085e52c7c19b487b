"""Pathwise reference solver for the transformed equation

    dy/dt + e^{-W} A(t)(e^W y) + mu y = 0,   y(0) = x0,   X = e^W y,

by backward Euler with Newton at every step.  It shares the time grid and
Newton machinery with the splitting so that comparisons isolate the
splitting error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .noise import WienerPath
from .operators import MonotoneOperator
from .resolvents import SolverOpts, newton_solve
from .errors import NewtonDivergedError


@dataclass
class ReferenceSolution:
    y: np.ndarray
    X: np.ndarray
    residual: np.ndarray
    dt: float
    n: int


def _defect(op, path, k, y_prev, y):
    E = path.exp_plus[k]
    return ((y - y_prev) / path.dt + path.exp_minus[k] * op.apply(path.t[k], E * y)
            + path.mu_field * y)


def reference_solve(op: MonotoneOperator, path: WienerPath, x0: np.ndarray,
                    opts: SolverOpts | None = None) -> ReferenceSolution:
    opts = opts or SolverOpts()
    tr = op.triple
    K, dt = path.K, path.dt
    y = np.empty((K + 1, path.grid.n))
    y[0] = x0
    res = np.zeros(K + 1)
    for k in range(1, K + 1):
        Ep, Em = path.exp_plus[k], path.exp_minus[k]
        prev = y[k - 1]

        def residual(u, k=k, prev=prev):
            return _defect(op, path, k, prev, u)

        def jacobian(u, k=k, Ep=Ep, Em=Em):
            Jx = op.jacobian(path.t[k], Ep * u)
            return Jx.scale_rows(Em).scale_cols(Ep).add_diagonal(1.0 / dt + path.mu_field)

        try:
            y[k], rn, _ = newton_solve(residual, jacobian, tr.norm_Vdual, prev, opts,
                                       what=f"reference step {k}")
        except NewtonDivergedError as exc:
            exc.index = k
            raise
        res[k] = float(rn)
    return ReferenceSolution(y, path.exp_plus * y, res, dt, path.grid.n)


def residual_certificate(op: MonotoneOperator, path: WienerPath, X: np.ndarray) -> np.ndarray:
    """V' norms of the backward-Euler defects of y = e^{-W} X, steps 1..K."""
    y = path.exp_minus * np.asarray(X, dtype=float)
    d = ((y[1:] - y[:-1]) / path.dt + path.exp_minus[1:] * op.apply(path.t[1:], X[1:])
         + path.mu_field * y[1:])
    return op.triple.norm_Vdual(d)
