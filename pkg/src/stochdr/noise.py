"""Truncated Wiener noise W(t, xi) = sum_j mu_j e_j(xi) beta_j(t).

The basis is e_j(xi) = sqrt(2) sin(j pi xi), orthonormal in L^2(0, 1) and
vanishing on the boundary, with coefficients mu_j = mu0 * j**(-decay_p).
A sampled path carries everything the pathwise solvers need: the
exponential multipliers e^{+-W} at every (t_k, xi_i), the Ito correction
field mu(xi) = 1/2 sum_j mu_j^2 e_j(xi)^2 and the strong-monotonicity
constant nu = sum_j mu_j^2 gamma_j^2 |e_j|_inf^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from .spaces import GelfandTriple, Grid, TripleKind

SUP_NORM_BASIS = np.sqrt(2.0)


@dataclass(frozen=True)
class NoiseSpec:
    J_modes: int = 8
    mu0: float = 0.2
    decay_p: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.J_modes < 1:
            raise ValueError("J_modes must be >= 1")
        if self.mu0 < 0:
            raise ValueError("mu0 must be nonnegative")
        if self.decay_p <= 1.5:
            raise ValueError("decay_p must exceed 3/2")

    @property
    def coefficients(self) -> np.ndarray:
        j = np.arange(1, self.J_modes + 1, dtype=float)
        return self.mu0 * j ** (-self.decay_p)

    def basis(self, grid: Grid) -> np.ndarray:
        """Mode functions at the interior nodes, shape (J_modes, n)."""
        j = np.arange(1, self.J_modes + 1)[:, None]
        return SUP_NORM_BASIS * np.sin(j * np.pi * grid.nodes[None, :])

    @property
    def gradient_sum(self) -> float:
        """sum_j mu_j^2 |e_j'|_inf^2, finite for decay_p > 3/2."""
        j = np.arange(1, self.J_modes + 1, dtype=float)
        return float(np.sum(self.coefficients**2 * 2.0 * (j * np.pi) ** 2))


def multiplier_norm(e: np.ndarray, triple: GelfandTriple) -> float:
    """Operator norm of y -> e*y on the discrete pivot space H.

    For the POROUS triple (H = H^{-1}) this is the largest generalized
    eigenvalue of (D L^{-1} D, L^{-1}).
    """
    if triple.kind is TripleKind.STANDARD:
        return float(np.max(np.abs(e)))
    Linv = triple.L.solve(np.eye(triple.grid.n))
    a = e[:, None] * Linv * e[None, :]
    top = eigh(a, Linv, eigvals_only=True, subset_by_index=[len(e) - 1, len(e) - 1])
    return float(np.sqrt(max(top[0], 0.0)))


def compute_nu(spec: NoiseSpec, grid: Grid, triple: GelfandTriple | TripleKind | str
               = TripleKind.STANDARD) -> float:
    if not isinstance(triple, GelfandTriple):
        triple = GelfandTriple(grid, triple)
    mu = spec.coefficients
    if spec.mu0 == 0:
        return 0.0
    if triple.kind is TripleKind.STANDARD:
        gamma = np.full(spec.J_modes, max(1.0, SUP_NORM_BASIS))
    else:
        gamma = np.array([max(1.0, multiplier_norm(e, triple)) for e in spec.basis(grid)])
    return float(np.sum(mu**2 * gamma**2 * SUP_NORM_BASIS**2))


def compute_mu_field(spec: NoiseSpec, grid: Grid) -> np.ndarray:
    mu = spec.coefficients
    return 0.5 * np.einsum("j,ji->i", mu**2, spec.basis(grid) ** 2)


def path_seed(base_seed: int, m: int) -> np.random.SeedSequence:
    """Seed of Monte Carlo path m; independent of how paths are scheduled."""
    return np.random.SeedSequence(entropy=int(base_seed), spawn_key=(int(m),))


@dataclass(frozen=True, eq=False)
class WienerPath:
    """One sampled noise trajectory on the time grid t_k = k dt, k = 0..K."""

    t: np.ndarray
    beta: np.ndarray
    W: np.ndarray
    exp_plus: np.ndarray
    exp_minus: np.ndarray
    mu_field: np.ndarray
    nu: float
    triple: GelfandTriple = field(repr=False)
    spec: NoiseSpec | None = None

    @property
    def K(self) -> int:
        return len(self.t) - 1

    @property
    def T(self) -> float:
        return float(self.t[-1])

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def grid(self) -> Grid:
        return self.triple.grid

    # process-space geometry, e^W-weighted and integrated over time -------
    def inner_V(self, u, w) -> float:
        return self.dt * float(np.sum(self.triple.inner_V(self.exp_plus * u, self.exp_plus * w)))

    def norm_V(self, u) -> float:
        return float(np.sqrt(max(self.inner_V(u, u), 0.0)))

    def inner_H(self, u, w) -> float:
        return self.dt * float(np.sum(self.triple.inner_H(self.exp_plus * u, self.exp_plus * w)))

    def norm_H(self, u) -> float:
        return float(np.sqrt(max(self.inner_H(u, u), 0.0)))

    def lift(self, x0: np.ndarray) -> np.ndarray:
        """Constant-in-time process equal to x0."""
        return np.broadcast_to(np.asarray(x0, dtype=float), self.W.shape).copy()


def sample_path(spec: NoiseSpec, grid: Grid, K: int, T: float,
                triple: GelfandTriple | TripleKind | str = TripleKind.STANDARD,
                seed=None) -> WienerPath:
    """Sample beta_j on t_k = k T/K and assemble W and its multipliers.

    ``seed`` overrides ``spec.seed``; it may be an int or a SeedSequence.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if not T > 0:
        raise ValueError("T must be positive")
    if not isinstance(triple, GelfandTriple):
        triple = GelfandTriple(grid, triple)
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    dt = T / K
    t = np.arange(K + 1) * dt
    increments = rng.standard_normal((spec.J_modes, K)) * np.sqrt(dt)
    beta = np.zeros((spec.J_modes, K + 1))
    beta[:, 1:] = np.cumsum(increments, axis=1)
    W = np.einsum("jk,j,ji->ki", beta, spec.coefficients, spec.basis(grid))
    return WienerPath(
        t=t, beta=beta, W=W, exp_plus=np.exp(W), exp_minus=np.exp(-W),
        mu_field=compute_mu_field(spec, grid), nu=compute_nu(spec, grid, triple),
        triple=triple, spec=spec,
    )


def zero_path(grid: Grid, K: int, T: float,
              triple: GelfandTriple | TripleKind | str = TripleKind.STANDARD) -> WienerPath:
    return sample_path(NoiseSpec(J_modes=1, mu0=0.0), grid, K, T, triple)


def empirical_Z(path: WienerPath, triple: GelfandTriple | None = None,
                samples: int = 32, seed: int = 0) -> np.ndarray:
    """Per-time empirical multiplier bound for e^{+-W(t_k)} in V and H.

    Each random y contributes the ratios |e^{+-W} y| / |y| in both norms
    and their reciprocals; the reciprocal of the ratio for y is the ratio
    of the opposite multiplier at the field e^{+-W} y, so it is itself a
    sampled ratio and makes Z >= 1 automatic.
    """
    triple = triple or path.triple
    rng = np.random.default_rng(seed)
    n = path.grid.n
    k = np.arange(1, n + 1)
    # rough and smooth samples
    rough = rng.standard_normal((samples, n))
    smooth = rng.standard_normal((samples, n)) / k**2 @ np.sin(np.pi * np.outer(k, path.grid.nodes))
    Y = np.concatenate([rough, smooth])[None, :, :]
    Z = np.ones(path.K + 1)
    for norm in (triple.norm_V, triple.norm_H):
        base = norm(Y)
        for mult in (path.exp_plus, path.exp_minus):
            r = norm(mult[:, None, :] * Y) / base
            Z = np.maximum(Z, np.max(np.maximum(r, 1.0 / r), axis=1))
    return Z
