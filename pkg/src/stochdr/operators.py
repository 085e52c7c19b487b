"""Nonlinear monotone operators A(t): V -> V' on the discrete triples.

Built-ins
---------
* :class:`QuasilinearOperator` -- ``-div a(grad u) + nu_react u + psi(u)`` on
  the STANDARD triple, in the discrete divergence form obtained as the
  gradient of ``sum_edges h Phi(D+u)`` with ``Phi' = a``.
* :class:`PorousMediaOperator` -- ``-Laplace(psi(u) + nu_lin u)`` on the
  POROUS triple; weak form ``<A y, v> = h sum (psi(y) + nu_lin y) v``.
* :func:`reaction_diffusion` -- ``-Laplace u + Psi(u)`` for the H x H scheme.

Operators act on batches: ``apply(t, u)`` with ``u`` of shape ``(..., n)``
and ``t`` a scalar or an array of shape ``u.shape[:-1]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .spaces import GelfandTriple, Grid, Tridiagonal, TripleKind


# pointwise nonlinearities -------------------------------------------------

@dataclass(frozen=True)
class ScalarMap:
    """r -> f(r) with derivative and declared bounds.

    Bounds: ``|f(r)| <= slope * |r| + offset`` and
    ``f(r) r >= coercive_slope * r**2 + coercive_offset``.
    ``growth_exponent`` is the p in ``|f(r)| <= C(|r|**p + 1)``.
    """

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]
    slope: float
    offset: float = 0.0
    coercive_slope: float = 0.0
    coercive_offset: float = 0.0
    odd: bool = True
    growth_exponent: float = 1.0

    def __call__(self, r):
        return self.f(r)


def _default_flux(r):
    r2 = r * r
    return r * (1.0 + r2 / (1.0 + r2))


def _default_flux_prime(r):
    r2 = r * r
    return 1.0 + (3.0 * r2 + r2 * r2) / (1.0 + r2) ** 2


def _cubic_sat(r):
    r2 = r * r  # not r**3: keep f(-r) == -f(r) bit for bit
    return r * r2 / (1.0 + r2)


def _cubic_sat_prime(r):
    r2 = r * r
    return (r2 * r2 + 3.0 * r2) / (1.0 + r2) ** 2


SCALAR_MAPS: dict[str, ScalarMap] = {
    m.name: m
    for m in [
        ScalarMap("default_flux", _default_flux, _default_flux_prime, slope=2.0,
                  coercive_slope=1.0),
        ScalarMap("linear", lambda r: 1.0 * r, lambda r: np.ones_like(r), slope=1.0,
                  coercive_slope=1.0),
        ScalarMap("zero", lambda r: 0.0 * r, lambda r: np.zeros_like(r), slope=0.0,
                  growth_exponent=0.0),
        ScalarMap("saturating", lambda r: r / (1.0 + np.abs(r)),
                  lambda r: 1.0 / (1.0 + np.abs(r)) ** 2, slope=0.0, offset=1.0,
                  growth_exponent=0.0),
        ScalarMap("cubic_saturating", _cubic_sat, _cubic_sat_prime, slope=1.0),
        ScalarMap("porous_default", lambda r: r + np.arctan(r),
                  lambda r: 1.0 + 1.0 / (1.0 + r * r), slope=1.0, offset=np.pi / 2,
                  coercive_slope=1.0),
        # deliberately non-monotone; negative control for the hypothesis checks
        ScalarMap("negative_linear", lambda r: -1.0 * r, lambda r: -np.ones_like(r),
                  slope=1.0),
    ]
}


def scalar_map(m: ScalarMap | str) -> ScalarMap:
    if isinstance(m, ScalarMap):
        return m
    try:
        return SCALAR_MAPS[m]
    except KeyError:
        raise KeyError(f"unknown scalar map {m!r}; known: {sorted(SCALAR_MAPS)}") from None


@dataclass(frozen=True)
class TimeProfile:
    """c(t) = 1 + amp sin(2 pi freq t), a positive multiplicative factor."""

    amp: float = 0.0
    freq: float = 1.0

    def __post_init__(self):
        if not 0 <= self.amp < 1:
            raise ValueError("profile amplitude must lie in [0, 1)")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.amp == 0:
            return np.ones_like(t)
        return 1.0 + self.amp * np.sin(2 * np.pi * self.freq * t)

    @property
    def bounds(self) -> tuple[float, float]:
        return 1.0 - self.amp, 1.0 + self.amp


@dataclass(frozen=True)
class HypothesisConstants:
    """Declared constants of the coercivity and growth bounds.

    <A u, u> >= alpha1 |u|_V^2 + alpha2 |u|_H^2 + alpha3 and
    |A u|_V' <= gamma1 |u|_V + gamma2.
    """

    alpha1: float
    alpha2: float = 0.0
    alpha3: float = 0.0
    gamma1: float = 0.0
    gamma2: float = 0.0


def _scale_constants(c: HypothesisConstants, lo: float, hi: float) -> HypothesisConstants:
    """Constants of c(t) A when c(t) ranges over [lo, hi]."""

    def down(x):
        return x * (lo if x >= 0 else hi)

    return HypothesisConstants(down(c.alpha1), down(c.alpha2), down(c.alpha3),
                               c.gamma1 * hi, c.gamma2 * hi)


class MonotoneOperator:
    """Interface of A(t). Subclasses implement ``apply`` and ``jacobian``."""

    name = "operator"
    triple: GelfandTriple
    is_odd: bool = False
    constants: HypothesisConstants
    strong_margin: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.triple.grid

    def apply(self, t, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, t, u: np.ndarray) -> Tridiagonal:
        """Finite-difference fallback, one column colour class at a time."""
        u = np.asarray(u, dtype=float)
        n = u.shape[-1]
        eps = 1e-7 * (1.0 + np.max(np.abs(u)))
        lower = np.zeros_like(u)
        diag = np.zeros_like(u)
        upper = np.zeros_like(u)
        for colour in range(3):
            e = np.zeros(n)
            e[colour::3] = 1.0
            col = (self.apply(t, u + eps * e) - self.apply(t, u - eps * e)) / (2 * eps)
            for j in range(colour, n, 3):
                diag[..., j] = col[..., j]
                if j > 0:
                    upper[..., j - 1] = col[..., j - 1]
                if j < n - 1:
                    lower[..., j + 1] = col[..., j + 1]
        return Tridiagonal(lower, diag, upper)

    def scalar_maps(self) -> dict[str, tuple[ScalarMap, bool]]:
        """Pointwise maps of the operator with whether each must be monotone."""
        return {}

    def __call__(self, t, u):
        return self.apply(t, u)


def _profile(profile: TimeProfile, t, u: np.ndarray) -> np.ndarray:
    c = profile(np.broadcast_to(np.asarray(t, dtype=float), u.shape[:-1]))
    return c[..., None]


@dataclass(frozen=True, eq=False)
class QuasilinearOperator(MonotoneOperator):
    """-div a(grad u) + nu_react u + psi(u), homogeneous Dirichlet, STANDARD."""

    grid_: Grid
    flux: ScalarMap = field(default_factory=lambda: SCALAR_MAPS["default_flux"])
    reaction: ScalarMap = field(default_factory=lambda: SCALAR_MAPS["saturating"])
    nu_react: float = 0.0
    profile: TimeProfile = field(default_factory=TimeProfile)
    name: str = "quasilinear"

    def __post_init__(self):
        object.__setattr__(self, "flux", scalar_map(self.flux))
        object.__setattr__(self, "reaction", scalar_map(self.reaction))
        object.__setattr__(self, "triple", GelfandTriple(self.grid_, TripleKind.STANDARD))

    @property
    def is_odd(self) -> bool:
        return self.flux.odd and self.reaction.odd

    @property
    def constants(self) -> HypothesisConstants:
        lam1 = self.grid_.laplacian.lambda_min
        a, p = self.flux, self.reaction
        # |u|_V' <= |u|_V / lam1 and |1|_H <= 1 on the discrete grid
        base = HypothesisConstants(
            alpha1=a.coercive_slope,
            alpha2=self.nu_react + p.coercive_slope,
            alpha3=min(a.coercive_offset, 0.0) + min(p.coercive_offset, 0.0),
            gamma1=a.slope + (self.nu_react + p.slope) / lam1,
            gamma2=a.offset + p.offset / np.sqrt(lam1),
        )
        return _scale_constants(base, *self.profile.bounds)

    def _grad(self, u):
        pad = np.zeros(u.shape[:-1] + (u.shape[-1] + 2,))
        pad[..., 1:-1] = u
        return np.diff(pad, axis=-1) / self.grid_.h

    def apply(self, t, u):
        u = np.asarray(u, dtype=float)
        q = self.flux(self._grad(u))
        out = -(q[..., 1:] - q[..., :-1]) / self.grid_.h + self.nu_react * u + self.reaction(u)
        return out * _profile(self.profile, t, u)

    def jacobian(self, t, u):
        u = np.asarray(u, dtype=float)
        s = self.flux.df(self._grad(u)) / self.grid_.h**2
        lower = -s[..., :-1]
        upper = -s[..., 1:]
        diag = s[..., 1:] + s[..., :-1] + self.nu_react + self.reaction.df(u)
        c = _profile(self.profile, t, u)
        return Tridiagonal(lower * c, diag * c, upper * c)

    def scalar_maps(self):
        return {"flux": (self.flux, True), "reaction": (self.reaction, True)}


@dataclass(frozen=True, eq=False)
class PorousMediaOperator(MonotoneOperator):
    """-Laplace(psi(u) + nu_lin u) as a map L^2 -> V' of the POROUS triple."""

    grid_: Grid
    psi: ScalarMap = field(default_factory=lambda: SCALAR_MAPS["porous_default"])
    nu_lin: float = 0.1
    profile: TimeProfile = field(default_factory=TimeProfile)
    name: str = "porous_media"

    def __post_init__(self):
        object.__setattr__(self, "psi", scalar_map(self.psi))
        object.__setattr__(self, "triple", GelfandTriple(self.grid_, TripleKind.POROUS))

    @property
    def is_odd(self) -> bool:
        return self.psi.odd

    @property
    def constants(self) -> HypothesisConstants:
        p = self.psi
        base = HypothesisConstants(
            alpha1=p.coercive_slope + self.nu_lin,
            alpha3=min(p.coercive_offset, 0.0),
            gamma1=p.slope + self.nu_lin,
            gamma2=p.offset,
        )
        return _scale_constants(base, *self.profile.bounds)

    def apply(self, t, u):
        u = np.asarray(u, dtype=float)
        L = self.grid_.laplacian
        return L.matvec(self.psi(u) + self.nu_lin * u) * _profile(self.profile, t, u)

    def jacobian(self, t, u):
        u = np.asarray(u, dtype=float)
        d = (self.psi.df(u) + self.nu_lin) * _profile(self.profile, t, u)
        return self.grid_.laplacian.tridiagonal().scale_cols(d)

    def scalar_maps(self):
        return {"psi": (self.psi, True)}


def reaction_diffusion(grid: Grid, Psi: ScalarMap | str = "cubic_saturating",
                       profile: TimeProfile | None = None) -> QuasilinearOperator:
    """-Laplace u + Psi(u): the instance used by the H x H scheme."""
    return QuasilinearOperator(grid, flux="linear", reaction=Psi, nu_react=0.0,
                               profile=profile or TimeProfile(), name="reaction_diffusion")


def laplacian_operator(grid: Grid, kind: TripleKind | str = TripleKind.STANDARD):
    """The linear operator A = L (= J) on either triple."""
    if TripleKind(kind) is TripleKind.STANDARD:
        return QuasilinearOperator(grid, flux="linear", reaction="zero", name="laplacian")
    return PorousMediaOperator(grid, psi="linear", nu_lin=0.0, name="laplacian")


@dataclass(frozen=True, eq=False)
class ShiftedOperator(MonotoneOperator):
    """X -> e^{-ct} A(t)(e^{ct} X) + c X with c = nu + delta."""

    base: MonotoneOperator
    c: float
    T: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "triple", self.base.triple)

    @property
    def name(self):
        return f"shifted({self.base.name})"

    @property
    def is_odd(self):
        return self.base.is_odd

    @property
    def strong_margin(self):
        return self.base.strong_margin + self.c

    @property
    def constants(self):
        b = self.base.constants
        alpha3 = b.alpha3 if b.alpha3 <= 0 else b.alpha3 * np.exp(-2 * self.c * self.T)
        return HypothesisConstants(
            alpha1=b.alpha1, alpha2=b.alpha2 + self.c, alpha3=alpha3,
            gamma1=b.gamma1 + self.c * self.triple.dual_embedding_constant,
            gamma2=b.gamma2,
        )

    def _factor(self, t, X):
        return np.exp(self.c * np.broadcast_to(np.asarray(t, dtype=float), X.shape[:-1]))[..., None]

    def apply(self, t, X):
        X = np.asarray(X, dtype=float)
        e = self._factor(t, X)
        return self.base.apply(t, e * X) / e + self.c * X

    def jacobian(self, t, X):
        X = np.asarray(X, dtype=float)
        return self.base.jacobian(t, self._factor(t, X) * X).add_diagonal(self.c)

    def scalar_maps(self):
        return self.base.scalar_maps()


def shift_operator(op: MonotoneOperator, nu: float, delta: float = 0.0,
                   T: float = 1.0) -> ShiftedOperator:
    """Strong-monotonicity shift: the result satisfies
    <A~u - A~v, u - v> >= (nu + delta) |u - v|_H^2."""
    if nu < 0 or delta < 0:
        raise ValueError("nu and delta must be nonnegative")
    return ShiftedOperator(op, nu + delta, T)


def apply_A(op: MonotoneOperator, t, u):
    return op.apply(t, u)


def jacobian_A(op: MonotoneOperator, t, u) -> Tridiagonal:
    return op.jacobian(t, u)


# empirical hypothesis checks ---------------------------------------------

@dataclass
class HypothesisReport:
    operator: str
    trials: int
    margins: dict[str, float] = field(default_factory=dict)
    passed: dict[str, bool] = field(default_factory=dict)
    witnesses: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    @property
    def failures(self) -> list[str]:
        return [k for k, v in self.passed.items() if not v]

    def lines(self) -> list[str]:
        out = []
        for k in self.passed:
            tag = "PASS" if self.passed[k] else "FAIL"
            out.append(f"{tag} {k:<14} worst margin {self.margins[k]: .3e}")
        return out


def random_fields(rng: np.random.Generator, n: int, count: int, max_scale: float = 30.0):
    """Fields mixing rough and smooth profiles over several amplitude decades."""
    k = np.arange(1, n + 1)
    xi = np.arange(1, n + 1) / (n + 1)
    rough = rng.standard_normal((count, n))
    smooth = (rng.standard_normal((count, n)) / k**2) @ np.sin(np.pi * np.outer(k, xi))
    pick = rng.random(count) < 0.5
    u = np.where(pick[:, None], rough, smooth)
    u /= np.maximum(np.max(np.abs(u), axis=1, keepdims=True), 1e-300)
    scale = 10.0 ** rng.uniform(-2, np.log10(max_scale), size=count)
    return u * scale[:, None]


def check_hypotheses(op: MonotoneOperator, trials: int = 1000, seed: int = 0,
                     t_max: float = 1.0, jac_trials: int | None = None,
                     rtol: float = 1e-10) -> HypothesisReport:
    """Sample the monotonicity, coercivity, growth, oddness and Jacobian claims.

    Margins are normalized by the size of the terms compared, so a value
    below ``-rtol`` is a violation; the violating field is kept as witness.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    tr = op.triple
    n = tr.grid.n
    c = op.constants
    rep = HypothesisReport(op.name, trials)

    def record(name, margin, fields):
        i = int(np.argmin(margin))
        rep.margins[name] = float(margin[i])
        rep.passed[name] = bool(margin[i] >= -rtol)
        rep.witnesses[name] = fields[i]

    for name, (m, must_increase) in op.scalar_maps().items():
        r = np.sort(np.concatenate([np.linspace(-50, 50, 2001), rng.uniform(-1e3, 1e3, 2000)]))
        fr = m(r)
        incr = np.diff(fr) / np.maximum(np.abs(fr[1:]) + np.abs(fr[:-1]), 1.0)
        margin = np.concatenate([incr, [-abs(float(m(np.array(0.0))))]])
        if must_increase:
            record(f"{name}_monotone", margin, np.concatenate([r[1:], [0.0]]))

    t = rng.uniform(0, t_max, size=trials)
    u = random_fields(rng, n, trials)
    v = random_fields(rng, n, trials)
    Au, Av = op.apply(t, u), op.apply(t, v)

    d = u - v
    lhs = tr.pair(Au - Av, d)
    rhs = op.strong_margin * tr.norm_H(d) ** 2
    record("monotone", (lhs - rhs) / (np.abs(lhs) + rhs + 1e-300), u)

    lhs = tr.pair(Au, u)
    rhs = c.alpha1 * tr.norm_V(u) ** 2 + c.alpha2 * tr.norm_H(u) ** 2 + c.alpha3
    record("coercive", (lhs - rhs) / (np.abs(lhs) + np.abs(rhs) + 1e-300), u)

    bound = c.gamma1 * tr.norm_V(u) + c.gamma2
    size = tr.norm_Vdual(Au)
    record("growth", (bound - size) / (bound + size + 1e-300), u)

    if op.is_odd:
        odd = tr.norm_Vdual(op.apply(t, -u) + Au)
        i = int(np.argmax(odd))
        rep.margins["odd"] = -float(odd[i])
        rep.passed["odd"] = bool(odd[i] == 0.0)
        rep.witnesses["odd"] = u[i]

    jt = jac_trials or min(trials, 200)
    uj = random_fields(rng, n, jt, max_scale=5.0)
    w = rng.standard_normal((jt, n))
    tj = t[:jt] if jt <= trials else rng.uniform(0, t_max, size=jt)
    eps = 1e-6
    fd = (op.apply(tj, uj + eps * w) - op.apply(tj, uj - eps * w)) / (2 * eps)
    jw = op.jacobian(tj, uj).matvec(w)
    rel = np.linalg.norm(jw - fd, axis=1) / np.maximum(np.linalg.norm(jw, axis=1), 1e-300)
    i = int(np.argmax(rel))
    rep.margins["jacobian"] = float(1e-4 - rel[i])
    rep.passed["jacobian"] = bool(rel[i] < 1e-4)
    rep.witnesses["jacobian"] = uj[i]
    return rep
