"""Deterministic checks of the Gaussian identities behind the error-part argument.

Kernels use g(x) = exp(-pi |x|^2) and phi_t(x) = t^-d phi(x / t).  Residuals
are reported relative to the sup norm of the left-hand side over the
evaluation grid, which stays meaningful at the zero set of (Delta g).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadWindow
from .structured import dyadic_index

PI = math.pi


def gauss(x: np.ndarray, scale: float) -> np.ndarray:
    """g_scale at points x of shape (..., d)."""
    d = x.shape[-1]
    return scale ** -d * np.exp(-PI * (x ** 2).sum(-1) / scale ** 2)


def gauss_laplacian(x: np.ndarray, scale: float) -> np.ndarray:
    """(Delta g)_scale = scale^-d (4 pi^2 |x/scale|^2 - 2 pi d) exp(-pi |x/scale|^2)."""
    d = x.shape[-1]
    u2 = (x ** 2).sum(-1) / scale ** 2
    return scale ** -d * (4 * PI ** 2 * u2 - 2 * PI * d) * np.exp(-PI * u2)


def gauss_partial(x: np.ndarray, scale: float, m: int) -> np.ndarray:
    """(d_m g)_scale = scale^-d (-2 pi x_m / scale) exp(-pi |x/scale|^2)."""
    return gauss(x, scale) * (-2 * PI * x[..., m] / scale)


def _g1(x, scale):
    return np.exp(-PI * (x / scale) ** 2) / scale


def _g1p(x, scale):
    return _g1(x, scale) * (-2 * PI * x / scale)


def _rel(lhs, rhs) -> float:
    top = float(np.abs(lhs).max())
    return float(np.abs(lhs - rhs).max()) / top if top > 0 else float(np.abs(rhs).max())


def check_heat_identity(t: float, lam: float, dim: int | None = None, points=None) -> float:
    """Max relative error of (Delta g)_(t lam) = 2 pi t d/dt g_(t lam).

    The time derivative is a central difference with step 1e-4 t.
    """
    if not (t > 0 and lam > 0):
        raise ValueError("t and lambda must be positive")
    if points is None:
        if dim is None:
            raise ValueError("give dim or points")
        points = default_grid(dim, 3.0 * t * lam)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if dim is not None and pts.shape[-1] != dim:
        raise ValueError("points do not have dimension dim")
    h = 1e-4 * t
    lhs = gauss_laplacian(pts, t * lam)
    rhs = 2 * PI * t * (gauss(pts, (t + h) * lam) - gauss(pts, (t - h) * lam)) / (2 * h)
    return _rel(lhs, rhs)


@dataclass(frozen=True)
class ScaleSplit:
    j: int
    t: float
    s: float
    r: float
    c: float


def scale_split(t: float, s: float, lam_j: float) -> ScaleSplit:
    """r = sqrt(t^2 lam_j^2 - s^2), c = t^2 lam_j^2 / (s r), for s in the dyadic window."""
    j = dyadic_index(lam_j)
    lo, hi = 2.0 ** (-j - 5) * t, 2.0 ** (-j - 4) * t
    if not lo <= s <= hi:
        raise BadWindow(f"s={s} outside [{lo}, {hi}] for j={j}")
    r = math.sqrt(t * t * lam_j * lam_j - s * s)
    return ScaleSplit(j, t, s, r, t * t * lam_j * lam_j / (s * r))


def _quad_nodes(lo, hi, step):
    n = int(math.ceil((hi - lo) / step)) + 1
    x = np.linspace(lo, hi, n)
    w = np.full(n, x[1] - x[0])
    w[[0, -1]] *= 0.5
    return x, w


def _conv_quadrature(f1, f2, offsets, half_width, step, dim):
    """sum_m int f1_m(z - q) f2_m(q) dq on a tensor trapezoid grid in dims 1-2."""
    x, wx = _quad_nodes(-half_width, half_width, step)
    if dim == 1:
        q, wq = x[:, None], wx
    else:
        X, Y = np.meshgrid(x, x, indexing="ij")
        q, wq = np.stack([X.ravel(), Y.ravel()], -1), np.outer(wx, wx).ravel()
    out = np.zeros(len(offsets))
    for m in range(dim):
        k2 = f2(q, m) * wq
        for lo in range(0, len(offsets), 64):
            z = offsets[lo:lo + 64]
            out[lo:lo + 64] += (f1(z[:, None, :] - q[None], m) * k2[None]).sum(-1)
    return out


def _sep_factor(f1, f2, z, half_width, step):
    """1-D quadrature of int f1(z - q) f2(q) dq for a vector of z."""
    x, w = _quad_nodes(-half_width, half_width, step)
    return (f1(z[:, None] - x[None]) * (f2(x) * w)[None]).sum(-1)


def _conv_separable(a, b, offsets, half_width, step, sign_flip=False):
    """sum_m (d_m g)_a * (d_m g)_b at offsets, any dimension.

    The non-derivative factors use the closed form g_a * g_b = g_sqrt(a^2+b^2);
    the derivative factor is integrated numerically.
    """
    dim = offsets.shape[1]
    comp = math.hypot(a, b)
    out = np.zeros(len(offsets))
    for m in range(dim):
        term = _sep_factor(lambda u: _g1p(u, a), lambda u: _g1p(u, b), offsets[:, m], half_width, step)
        for c in range(dim):
            if c != m:
                term = term * _g1(offsets[:, c], comp)
        out += term
    return -out if sign_flip else out


def default_grid(dim: int, half_width: float, points: int = 41) -> np.ndarray:
    x = np.linspace(-half_width, half_width, points)
    if dim == 1:
        return x[:, None]
    if dim == 2:
        X, Y = np.meshgrid(x, x, indexing="ij")
        return np.stack([X.ravel(), Y.ravel()], -1)
    rng = np.random.default_rng(dim)
    return rng.uniform(-half_width, half_width, (points * 8, dim))


@dataclass(frozen=True)
class ConvReport:
    split: ScaleSplit
    dim: int
    gkh_residual: float
    khh_residual: float
    method: str

    def holds(self, tol: float = 1e-3) -> bool:
        return self.gkh_residual <= tol and self.khh_residual <= tol


def check_conv_identities(s: float, t: float, lam_j: float, dim: int, grid=None) -> ConvReport:
    """Residuals of

    (Delta g)_(t lam_j) = c_j sum_m (d_m g)_(r_j) * (d_m g)_s
    -1/2 (Delta g)_(sqrt2 s)(z) = sum_m int (d_m g)_s(-q) (d_m g)_s(z - q) dq

    Quadrature is dense in dims 1-2 and separable (closed-form Gaussian
    composition) above.  ``grid`` optionally gives offsets for the first
    identity; the second uses offsets on the scale of s.
    """
    sp = scale_split(t, s, lam_j)
    big = t * lam_j
    z1 = default_grid(dim, 3 * big) if grid is None else np.atleast_2d(np.asarray(grid, float))
    z2 = default_grid(dim, 3 * math.sqrt(2) * s)
    step = s / 5
    if dim <= 2:
        method = "dense"
        rhs1 = sp.c * _conv_quadrature(lambda x, m: gauss_partial(x, sp.r, m),
                                       lambda x, m: gauss_partial(x, s, m), z1, 4 * s, step, dim)
        # x^0 = 0, x^w = z: integrand (d_m g)_s(-q) (d_m g)_s(z - q)
        hw = float(np.abs(z2).max()) + 4 * s
        rhs2 = _conv_quadrature(lambda x, m: gauss_partial(x, s, m),
                                lambda x, m: gauss_partial(-x, s, m), z2, hw, step, dim)
    else:
        method = "separable"
        rhs1 = sp.c * _conv_separable(sp.r, s, z1, 4 * s, step)
        hw = float(np.abs(z2).max()) + 4 * s
        # (d_m g)_s(-q) = -(d_m g)_s(q)
        rhs2 = _conv_separable(s, s, z2, hw, step, sign_flip=True)
    lhs1 = gauss_laplacian(z1, big)
    lhs2 = -0.5 * gauss_laplacian(z2, math.sqrt(2) * s)
    return ConvReport(sp, dim, _rel(lhs1, rhs1), _rel(lhs2, rhs2), method)


def khh_at_zero(s: float, dim: int) -> float:
    """Closed form of both sides of the second identity at offset 0: pi d / (sqrt2 s)^d."""
    return PI * dim / (math.sqrt(2) * s) ** dim
