"""Samplers for the configuration measure of a dilated simplex.

Two independent constructions are provided:

* the iterated conditional-sphere chain (``source="iterated-sphere"``), which
  places ``x^j`` uniformly on a sphere inside the affine plane orthogonal to
  the points sampled so far;
* a Haar-rotation oracle (``source="haar-rotation"``), ``y^j = lam R v^j``.

All batched samplers draw at unit scale and multiply by ``lam`` afterwards, so
one set of draws serves every dilation (common random numbers across scales).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadScale, DegeneratePrior
from .rng import Stream, as_stream
from .simplex import SimplexData

PRIOR_TOL = 1e-10

SPHERE = "iterated-sphere"
HAAR = "haar-rotation"


def _gen(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return as_stream(rng).generator()


@dataclass(frozen=True, eq=False)
class Configuration:
    points: np.ndarray  # (k, k+1)
    lam: float
    source: str

    def gram(self) -> np.ndarray:
        return self.points @ self.points.T


@dataclass(frozen=True, eq=False)
class MollifiedConfiguration:
    base: Configuration
    noise_scale: float
    perturbed_points: np.ndarray


def gaussian_sd(scale: float) -> float:
    """Per-coordinate standard deviation of the density t^-m exp(-pi |x/t|^2)."""
    return scale / math.sqrt(2.0 * math.pi)


def _complement_basis(prior: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of span(prior rows).

    ``prior`` has shape (m, j, dim); returns (m, dim, dim - j).  Uses the
    Householder QR of LAPACK.
    """
    m, j, dim = prior.shape
    Q, R = np.linalg.qr(np.swapaxes(prior, 1, 2), mode="complete")
    diag = np.abs(np.diagonal(R[:, :j, :j], axis1=1, axis2=2))
    scale = np.abs(prior).max(axis=(1, 2))
    if np.any(diag.min(axis=1) <= PRIOR_TOL * np.maximum(scale, np.finfo(float).tiny)):
        raise DegeneratePrior("prior points are numerically linearly dependent")
    return Q[:, :, j:]


def _sphere_step(simplex: SimplexData, j: int, prior: np.ndarray,
                 gen: np.random.Generator) -> np.ndarray:
    """Draw x^(j+1) (zero-based j) for a batch of unit-scale priors (m, j, dim)."""
    m = prior.shape[0]
    dim = simplex.embedded_dim
    r = simplex.norms[j]
    z = gen.standard_normal((m, dim - j))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    if j == 0:
        return r * z
    basis = _complement_basis(prior)
    dirs = prior / np.linalg.norm(prior, axis=2, keepdims=True)
    center = r * np.einsum("l,mld->md", simplex.beta[j, :j], dirs)
    return center + r * simplex.residual_radii[j] * np.einsum("mdc,mc->md", basis, z)


def sphere_configurations(simplex: SimplexData, size: int, rng) -> np.ndarray:
    """Unit-scale configurations from the iterated-sphere chain, shape (size, k, k+1)."""
    gen = _gen(rng)
    k, dim = simplex.k, simplex.embedded_dim
    out = np.zeros((size, k, dim))
    for j in range(k):
        out[:, j] = _sphere_step(simplex, j, out[:, :j], gen)
    return out


def haar_rotations(dim: int, size: int, rng) -> np.ndarray:
    """Haar-distributed elements of SO(dim), shape (size, dim, dim)."""
    gen = _gen(rng)
    Z = gen.standard_normal((size, dim, dim))
    Q, R = np.linalg.qr(Z)
    signs = np.sign(np.diagonal(R, axis1=1, axis2=2))
    signs[signs == 0] = 1.0
    Q = Q * signs[:, None, :]
    neg = np.linalg.det(Q) < 0
    Q[neg, :, 0] *= -1.0
    return Q


def haar_configurations(simplex: SimplexData, size: int, rng) -> np.ndarray:
    R = haar_rotations(simplex.embedded_dim, size, rng)
    return np.einsum("mde,je->mjd", R, simplex.embedded())


def unit_configurations(simplex: SimplexData, size: int, rng, method: str = SPHERE) -> np.ndarray:
    if method == SPHERE:
        return sphere_configurations(simplex, size, rng)
    if method == HAAR:
        return haar_configurations(simplex, size, rng)
    raise ValueError(f"unknown sampler {method!r}")


def _check_lam(lam):
    if not lam > 0:
        raise BadScale(f"lambda must be positive, got {lam}")


def sample_conditional_sphere(simplex: SimplexData, lam: float, prior, rng) -> np.ndarray:
    """Draw the next point of the chain given already-sampled points ``prior``."""
    _check_lam(lam)
    prior = np.asarray(prior, dtype=float).reshape(-1, simplex.embedded_dim)
    j = prior.shape[0]
    if j >= simplex.k:
        raise ValueError("all points of the configuration are already sampled")
    if j and np.any(np.linalg.norm(prior, axis=1) == 0):
        raise DegeneratePrior("prior contains the zero vector")
    return lam * _sphere_step(simplex, j, prior[None] / lam, _gen(rng))[0]


def sample_configuration(simplex: SimplexData, lam: float, rng) -> Configuration:
    _check_lam(lam)
    pts = lam * sphere_configurations(simplex, 1, rng)[0]
    return Configuration(pts, float(lam), SPHERE)


def sample_rotation_oracle(simplex: SimplexData, lam: float, rng) -> Configuration:
    _check_lam(lam)
    pts = lam * haar_configurations(simplex, 1, rng)[0]
    return Configuration(pts, float(lam), HAAR)


def mollify(config: Configuration, epsilon: float, rng) -> MollifiedConfiguration:
    """Convolve with g_(eps*lam): add centred Gaussian noise of sd eps*lam/sqrt(2 pi)."""
    if not epsilon > 0:
        raise BadScale(f"epsilon must be positive, got {epsilon}")
    t = epsilon * config.lam
    w = _gen(rng).standard_normal(config.points.shape) * gaussian_sd(t)
    return MollifiedConfiguration(config, t, config.points + w)


def gram_residual(points: np.ndarray, simplex: SimplexData, lam: float) -> float:
    """max |y^l . y^m - lam^2 v^l . v^m| over a batch (..., k, k+1)."""
    G = np.einsum("...ld,...md->...lm", points, points)
    return float(np.abs(G - lam ** 2 * simplex.gram).max()) if G.size else 0.0
