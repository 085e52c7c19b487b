"""Discrete 1-D Gelfand triples on the unit interval.

Fields are stored as nodal values on the interior nodes of a uniform grid
on (0, 1); homogeneous Dirichlet values at both ends are implicit.  Every
array routine here accepts a batch of fields with shape ``(..., n)``.

Two triples are supported:

``STANDARD``
    V = H^1_0, H = L^2, V' = H^{-1}, pairing <f, u> = h f.u
``POROUS``
    V = L^2, H = H^{-1}, V' = dual of L^2 with pivot H^{-1},
    pairing <f, u> = h (L^{-1} f).u

In both cases the duality map J is the discrete Dirichlet Laplacian L.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded, solve_banded


class TripleKind(enum.Enum):
    STANDARD = "standard"
    POROUS = "porous"


def _flatten_batch(x: np.ndarray) -> tuple[np.ndarray, tuple[int, ...]]:
    x = np.asarray(x, dtype=float)
    return x.reshape(-1, x.shape[-1]), x.shape


@dataclass(frozen=True)
class Tridiagonal:
    """Batched tridiagonal matrices.

    ``lower[..., i]`` is the entry (i, i-1) and ``upper[..., i]`` the entry
    (i, i+1); ``lower[..., 0]`` and ``upper[..., -1]`` are ignored.
    """

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    @property
    def shape(self) -> tuple[int, ...]:
        return np.broadcast_shapes(self.lower.shape, self.diag.shape, self.upper.shape)

    def _parts(self):
        shape = self.shape
        lo = np.array(np.broadcast_to(self.lower, shape), dtype=float)
        up = np.array(np.broadcast_to(self.upper, shape), dtype=float)
        lo[..., 0] = 0.0
        up[..., -1] = 0.0
        return lo, np.broadcast_to(self.diag, shape), up

    def matvec(self, x: np.ndarray) -> np.ndarray:
        lo, d, up = self._parts()
        out = d * x
        out[..., 1:] += lo[..., 1:] * x[..., :-1]
        out[..., :-1] += up[..., :-1] * x[..., 1:]
        return out

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve each batch member; all blocks go through a single banded LU."""
        rhs = np.asarray(rhs, dtype=float)
        shape = np.broadcast_shapes(self.shape, rhs.shape)
        lo, d, up = (np.broadcast_to(p, shape) for p in self._parts())
        ab = np.zeros((3, int(np.prod(shape))))
        ab[0, 1:] = up.reshape(-1)[:-1]
        ab[1] = d.reshape(-1)
        ab[2, :-1] = lo.reshape(-1)[1:]
        x = solve_banded((1, 1), ab, np.broadcast_to(rhs, shape).reshape(-1))
        return x.reshape(shape)

    def banded(self) -> np.ndarray:
        """Return the ``solve_banded`` layout of a single (unbatched) matrix."""
        lo, d, up = self._parts()
        if lo.ndim != 1:
            raise ValueError("banded() needs a single matrix")
        ab = np.zeros((3, lo.shape[0]))
        ab[0, 1:] = up[:-1]
        ab[1] = d
        ab[2, :-1] = lo[1:]
        return ab

    def scale(self, c) -> Tridiagonal:
        c = np.asarray(c, dtype=float)[..., None]
        return Tridiagonal(self.lower * c, self.diag * c, self.upper * c)

    def add_diagonal(self, d) -> Tridiagonal:
        return Tridiagonal(self.lower, self.diag + d, self.upper)

    def scale_rows(self, a: np.ndarray) -> Tridiagonal:
        """diag(a) @ T."""
        return Tridiagonal(self.lower * a, self.diag * a, self.upper * a)

    def scale_cols(self, b: np.ndarray) -> Tridiagonal:
        """T @ diag(b)."""
        lo = np.zeros(np.broadcast_shapes(self.lower.shape, np.shape(b)))
        up = np.zeros_like(lo)
        lo[..., 1:] = (self.lower * np.ones_like(lo))[..., 1:] * b[..., :-1]
        up[..., :-1] = (self.upper * np.ones_like(up))[..., :-1] * b[..., 1:]
        return Tridiagonal(lo, self.diag * b, up)

    def __add__(self, other: Tridiagonal) -> Tridiagonal:
        return Tridiagonal(self.lower + other.lower, self.diag + other.diag,
                           self.upper + other.upper)

    def toarray(self) -> np.ndarray:
        lo, d, up = self._parts()
        if lo.ndim != 1:
            raise ValueError("toarray() needs a single matrix")
        return np.diag(d) + np.diag(lo[1:], -1) + np.diag(up[:-1], 1)

    def to_sparse(self):
        from scipy.sparse import diags

        lo, d, up = self._parts()
        return diags([lo[1:], d, up[:-1]], [-1, 0, 1], format="csr")


class LaplacianOp:
    """Discrete Dirichlet -Laplacian, stencil (-1, 2, -1)/h^2.

    The Cholesky factor is computed once; ``solve`` applies L^{-1} to any
    batch of right-hand sides.
    """

    def __init__(self, n: int, h: float):
        self.n = n
        self.h = h
        self._c = 1.0 / h**2
        ab = np.zeros((2, n))
        ab[0, 1:] = -self._c
        ab[1] = 2.0 * self._c
        self._chol = cholesky_banded(ab)

    def matvec(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        out = 2.0 * u
        out[..., 1:] -= u[..., :-1]
        out[..., :-1] -= u[..., 1:]
        return out * self._c

    def solve(self, f: np.ndarray) -> np.ndarray:
        flat, shape = _flatten_batch(f)
        x = cho_solve_banded((self._chol, False), flat.T)
        return x.T.reshape(shape)

    def eigenvalue(self, k) -> np.ndarray:
        return 4.0 * self._c * np.sin(np.asarray(k) * np.pi * self.h / 2.0) ** 2

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalue(1))

    def tridiagonal(self) -> Tridiagonal:
        off = np.full(self.n, -self._c)
        return Tridiagonal(off, np.full(self.n, 2.0 * self._c), off.copy())

    def toarray(self) -> np.ndarray:
        return self.tridiagonal().toarray()


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform grid with ``n_interior`` interior nodes on (0, 1)."""

    n_interior: int
    h: float = field(init=False)
    nodes: np.ndarray = field(init=False, repr=False)
    laplacian: LaplacianOp = field(init=False, repr=False)

    def __post_init__(self):
        if int(self.n_interior) != self.n_interior or self.n_interior < 2:
            raise ValueError(f"need at least 2 interior nodes, got {self.n_interior}")
        n = int(self.n_interior)
        h = 1.0 / (n + 1)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "nodes", np.arange(1, n + 1) * h)
        object.__setattr__(self, "laplacian", LaplacianOp(n, h))

    @property
    def n(self) -> int:
        return self.n_interior

    def sine(self, k: int = 1) -> np.ndarray:
        return np.sin(k * np.pi * self.nodes)


def build_grid(n_interior: int) -> Grid:
    return Grid(n_interior)


class GelfandTriple:
    """Norms, pairing and duality map of one discrete triple V c H c V'.

    All three spaces share the nodal representation, so the embeddings
    are the identity on arrays; only the quadratic forms differ.
    """

    def __init__(self, grid: Grid, kind: TripleKind | str = TripleKind.STANDARD):
        self.grid = grid
        self.kind = TripleKind(kind)
        self.L = grid.laplacian

    def __repr__(self):
        return f"GelfandTriple(n={self.grid.n}, kind={self.kind.value})"

    @property
    def h(self) -> float:
        return self.grid.h

    def check(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape[-1] != self.grid.n:
            raise ValueError(f"field length {u.shape[-1]} != {self.grid.n}")
        if not np.all(np.isfinite(u)):
            raise ValueError("field has non-finite entries")
        return u

    def _dot(self, a, b) -> np.ndarray:
        n = self.grid.n
        if np.shape(a)[-1] != n or np.shape(b)[-1] != n:
            raise ValueError(f"field length {np.shape(a)[-1]} != {n}")
        return self.h * np.einsum("...i,...i->...", a, b)

    # quadratic forms -------------------------------------------------------
    def inner_V(self, u, v) -> np.ndarray:
        if self.kind is TripleKind.STANDARD:
            return self._dot(u, self.L.matvec(v))
        return self._dot(u, v)

    def inner_H(self, u, v) -> np.ndarray:
        if self.kind is TripleKind.STANDARD:
            return self._dot(u, v)
        return self._dot(u, self.L.solve(v))

    def inner_Vdual(self, f, g) -> np.ndarray:
        if self.kind is TripleKind.STANDARD:
            return self._dot(f, self.L.solve(g))
        return self._dot(self.L.solve(f), self.L.solve(g))

    def pair(self, f, u) -> np.ndarray:
        """Duality pairing <f, u> of f in V' with u in V (pivot H)."""
        if self.kind is TripleKind.STANDARD:
            return self._dot(f, u)
        return self._dot(self.L.solve(f), u)

    @staticmethod
    def _sqrt(q):
        return np.sqrt(np.maximum(q, 0.0))

    def norm_V(self, u) -> np.ndarray:
        return self._sqrt(self.inner_V(u, u))

    def norm_H(self, u) -> np.ndarray:
        return self._sqrt(self.inner_H(u, u))

    def norm_Vdual(self, f) -> np.ndarray:
        return self._sqrt(self.inner_Vdual(f, f))

    # duality map -----------------------------------------------------------
    def duality_map(self, u) -> np.ndarray:
        return self.L.matvec(u)

    def inverse_duality(self, f) -> np.ndarray:
        return self.L.solve(f)

    def duality_tridiagonal(self) -> Tridiagonal:
        return self.L.tridiagonal()

    @property
    def embedding_constant(self) -> float:
        """c with |u|_H <= c |u|_V (both triples: 1/sqrt(lambda_1))."""
        return 1.0 / np.sqrt(self.L.lambda_min)

    @property
    def dual_embedding_constant(self) -> float:
        """c with |u|_V' <= c |u|_V (both triples: 1/lambda_1)."""
        return 1.0 / self.L.lambda_min
