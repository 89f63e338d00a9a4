"""Simplex validation and the geometric data the configuration measure needs."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateSimplex, DimensionMismatch

DEGENERACY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SimplexData:
    """Precomputed geometry of the simplex {0, v^1, ..., v^k}.

    ``beta[j, m]`` (m < j) are the coordinates of the projection of ``u^j``
    onto span{u^1, ..., u^(j-1)} in the (non-orthogonal) basis of earlier unit
    directions; ``residual_radii[j]`` is the distance of ``u^j`` from that span.
    Indices are zero-based.
    """

    vertices: np.ndarray
    gram: np.ndarray
    norms: np.ndarray
    unit_dirs: np.ndarray
    beta: np.ndarray
    residual_radii: np.ndarray
    diameter: float

    @property
    def k(self) -> int:
        return self.vertices.shape[0]

    @property
    def embedded_dim(self) -> int:
        return self.k + 1

    def embedded(self) -> np.ndarray:
        """Vertices as rows in R^(k+1), last coordinate zero."""
        out = np.zeros((self.k, self.k + 1))
        out[:, : self.k] = self.vertices
        return out

    def permuted(self, order: Sequence[int]) -> "SimplexData":
        return validate_simplex(self.vertices[list(order)])


@dataclass(frozen=True)
class ProductShape:
    K: tuple
    k: int = field(init=False)
    kappa: int = field(init=False)
    varrho: int = field(init=False)
    ambient_dim: int = field(init=False)

    def __post_init__(self):
        K = tuple(int(x) for x in self.K)
        if not K or min(K) < 1:
            raise ValueError("K must be a non-empty tuple of positive integers")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "k", sum(K))
        object.__setattr__(self, "kappa", math.prod(c + 1 for c in K))
        object.__setattr__(self, "varrho", sum(c * (c + 2) for c in K))
        object.__setattr__(self, "ambient_dim", sum((c + 1) ** 2 for c in K))

    @property
    def n(self) -> int:
        return len(self.K)

    @property
    def point_dim(self) -> int:
        """Dimension k + n of the space containing A."""
        return self.k + self.n

    @property
    def factor_dims(self) -> tuple:
        return tuple(c + 1 for c in self.K)

    @property
    def offsets(self) -> tuple:
        """Start coordinate of each factor inside R^(k+n)."""
        out, acc = [], 0
        for d in self.factor_dims:
            out.append(acc)
            acc += d
        return tuple(out)


def _mgs(columns: np.ndarray):
    """Modified Gram-Schmidt with one re-orthogonalisation pass.

    Returns (Q, R) with ``columns = Q @ R`` and R upper triangular.
    """
    dim, k = columns.shape
    Q = np.zeros((dim, k))
    R = np.zeros((k, k))
    for j in range(k):
        w = columns[:, j].copy()
        for _ in range(2):
            for i in range(j):
                c = Q[:, i] @ w
                R[i, j] += c
                w -= c * Q[:, i]
        R[j, j] = np.linalg.norm(w)
        if R[j, j] > 0:
            Q[:, j] = w / R[j, j]
    return Q, R


def validate_simplex(vertices) -> SimplexData:
    """Check non-degeneracy of {0, v^1..v^k} and precompute its geometry."""
    rows = [np.asarray(v, dtype=float).ravel() for v in vertices]
    k = len(rows)
    if k < 1:
        raise DimensionMismatch("a simplex needs at least one vertex besides 0")
    for j, r in enumerate(rows):
        if r.shape[0] != k:
            raise DimensionMismatch(
                f"vertex {j + 1} has dimension {r.shape[0]}, expected {k}")
    V = np.vstack(rows)
    if not np.all(np.isfinite(V)):
        raise DegenerateSimplex("vertices must be finite")
    gram = V @ V.T
    norms = np.sqrt(np.diag(gram))
    scale = float(norms.max())
    if scale == 0.0 or np.linalg.det(gram) <= DEGENERACY_TOL * scale ** (2 * k):
        raise DegenerateSimplex("vertices are (numerically) linearly dependent")

    U = V / norms[:, None]
    _, R = _mgs(U.T)
    beta = np.zeros((k, k))
    rho = np.ones(k)
    for j in range(1, k):
        beta[j, :j] = np.linalg.solve(R[:j, :j], R[:j, j])
        rho[j] = R[j, j]

    pts = np.vstack([np.zeros(k), V])
    diffs = pts[:, None, :] - pts[None, :, :]
    diameter = float(np.sqrt((diffs ** 2).sum(-1)).max())

    for arr in (V, gram, norms, U, beta, rho):
        arr.setflags(write=False)
    return SimplexData(V, gram, norms, U, beta, rho, diameter)


def product_shape(simplices: Sequence[SimplexData]) -> ProductShape:
    if not simplices:
        raise ValueError("need at least one simplex")
    return ProductShape(tuple(s.k for s in simplices))


def ensure_simplices(simplices) -> list[SimplexData]:
    """Accept SimplexData or raw vertex lists."""
    return [s if isinstance(s, SimplexData) else validate_simplex(s) for s in simplices]


def right_simplex(k: int, scale: float = 1.0) -> SimplexData:
    """{0, e_1, ..., e_k} scaled."""
    return validate_simplex(scale * np.eye(k))


def equilateral_simplex(k: int, scale: float = 1.0) -> SimplexData:
    """Regular simplex of side ``scale``: |v^j| = 1, v^i . v^j = 1/2."""
    gram = np.full((k, k), 0.5) + 0.5 * np.eye(k)
    return validate_simplex(scale * np.linalg.cholesky(gram))


PRESETS = {"right": right_simplex, "equilateral": equilateral_simplex}


def preset(name: str, k: int, scale: float = 1.0) -> SimplexData:
    if name not in PRESETS:
        raise ValueError(f"unknown simplex preset {name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[name](int(k), float(scale))
