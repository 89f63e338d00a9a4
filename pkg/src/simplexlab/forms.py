"""Monte Carlo estimators for the counting forms N^0_lam(A) and N^eps_lam(A).

One sample draws a base point x_i^0 uniform in [0,1]^(k_i+1) for every factor,
a unit-scale configuration per factor and (always, so that streams stay
aligned) a standard normal noise array.  The sample value at (lam, eps) is the
product over h in H_K of 1_A(Pi_h x) with x_i^r = x_i^0 + lam (u_i^r + eps z_i^r / sqrt(2 pi)).
Because the draws do not depend on (lam, eps), every pair of settings is
compared under common random numbers.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BadScale
from .rng import Stream, as_stream, map_chunks
from .sampling import SPHERE, gaussian_sd, gram_residual, unit_configurations
from .sets import GridSet
from .simplex import SimplexData, ensure_simplices, product_shape

WITNESS_GRAM_TOL = 1e-9


@dataclass(frozen=True)
class FormEstimate:
    value: float
    stderr: float
    samples: int
    seed: str
    form: str = "N"
    lam: float | None = None
    epsilon: float | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def to_record(self) -> dict:
        rec = {"form": self.form, "lambda": self.lam, "epsilon": self.epsilon,
               "value": self.value, "stderr": self.stderr,
               "samples": self.samples, "seed": self.seed}
        rec.update(self.extra)
        return rec

    def positive(self) -> bool:
        return self.value > 3.0 * self.stderr


def estimate_from_samples(values: np.ndarray, seed: str, **kw) -> FormEstimate:
    values = np.asarray(values, dtype=float)
    n = values.size
    mean = float(values.mean()) if n else 0.0
    stderr = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return FormEstimate(mean, stderr, n, seed, **kw)


@dataclass(frozen=True)
class HypergraphIndex:
    """All maps h with 0 <= h(i) <= l_i, as tuples."""

    L: tuple
    members: tuple = field(init=False)

    def __post_init__(self):
        L = tuple(int(x) for x in self.L)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "members", tuple(itertools.product(*(range(l + 1) for l in L))))

    def __len__(self):
        return len(self.members)

    def restricted(self, v: int, w: int) -> tuple:
        """Members with h(v) = w (v zero-based)."""
        return tuple(h for h in self.members if h[v] == w)


def hyper_product(A: GridSet, factor_points: Sequence[np.ndarray], members=None) -> np.ndarray:
    """prod_h 1_A(Pi_h x) for a batch.

    ``factor_points[i]`` has shape (m, l_i + 1, k_i + 1), slot 0 being x_i^0.
    ``members`` defaults to all of H_L.
    """
    if members is None:
        members = HypergraphIndex(tuple(p.shape[1] - 1 for p in factor_points)).members
    m = factor_points[0].shape[0]
    out = np.ones(m, dtype=bool)
    for h in members:
        alive = np.flatnonzero(out)
        if alive.size == 0:
            break
        pt = np.concatenate([p[alive, r] for p, r in zip(factor_points, h)], axis=1)
        out[alive] = A.contains(pt)
    return out


@dataclass
class BaseDraw:
    """Scale-free random inputs of one chunk of samples."""

    x0: list  # per factor (m, k_i + 1)
    configs: list  # per factor (m, k_i, k_i + 1), unit scale
    noise: list  # per factor (m, k_i, k_i + 1), standard normal

    @property
    def size(self) -> int:
        return self.x0[0].shape[0]

    def factor_points(self, lam: float, eps: float) -> list[np.ndarray]:
        out = []
        for x0, y, z in zip(self.x0, self.configs, self.noise):
            disp = y if eps == 0 else y + gaussian_sd(eps) * z
            out.append(np.concatenate([x0[:, None, :], x0[:, None, :] + lam * disp], axis=1))
        return out


def draw_base(simplices: Sequence[SimplexData], size: int, stream: Stream,
              sampler: str = SPHERE) -> BaseDraw:
    x0, configs, noise = [], [], []
    for i, s in enumerate(simplices):
        x0.append(stream.child("x0", i).generator().random((size, s.embedded_dim)))
        configs.append(unit_configurations(s, size, stream.child("config", i), sampler))
        noise.append(stream.child("noise", i).generator().standard_normal((size, s.k, s.embedded_dim)))
    return BaseDraw(x0, configs, noise)


def _check(lam, eps):
    if not (0.0 < lam <= 1.0):
        raise BadScale(f"lambda must lie in (0, 1], got {lam}")
    if not (0.0 <= eps <= 1.0):
        raise BadScale(f"epsilon must lie in [0, 1], got {eps}")


def form_samples(A: GridSet, simplices, settings: Sequence[tuple], samples: int, rng=None,
                 workers: int | None = None, sampler: str = SPHERE, tag: str = "N",
                 on_chunk=None) -> np.ndarray:
    """Per-sample integrand values, shape (len(settings), samples), dtype uint8.

    ``settings`` is a list of (lam, eps).  All settings share the same draws.
    ``on_chunk(chunk_index, base, values)`` is called for every chunk (used for
    witness extraction).
    """
    simplices = ensure_simplices(simplices)
    for lam, eps in settings:
        _check(lam, eps)
    if A.shape != product_shape(simplices):
        raise ValueError("set shape does not match the simplices")
    stream = as_stream(rng).child(tag)

    def run(c, m):
        base = draw_base(simplices, m, stream.child(c), sampler)
        vals = np.stack([hyper_product(A, base.factor_points(lam, eps)) for lam, eps in settings])
        if on_chunk is not None:
            on_chunk(c, base, vals)
        return vals.astype(np.uint8)

    parts = map_chunks(run, samples, workers)
    if not parts:
        return np.zeros((len(settings), 0), dtype=np.uint8)
    return np.concatenate(parts, axis=1)


def estimate_N(A: GridSet, simplices, lam: float, epsilon: float = 0.0, samples: int = 10_000,
               rng=None, workers: int | None = None, sampler: str = SPHERE) -> FormEstimate:
    """Unbiased estimate of N^eps_lam(A); epsilon = 0 gives N^0_lam(A)."""
    stream = as_stream(rng)
    vals = form_samples(A, simplices, [(lam, epsilon)], samples, stream, workers, sampler)[0]
    return estimate_from_samples(vals, stream.id, form="N", lam=float(lam), epsilon=float(epsilon))


@dataclass(frozen=True, eq=False)
class Witness:
    """Explicit copy of lam*Delta_1 x ... x lam*Delta_n inside A."""

    lam: float
    base_points: tuple  # x_i in R^(k_i+1)
    displacements: tuple  # y_i, shape (k_i, k_i+1)

    def vertices(self) -> list[np.ndarray]:
        return [np.vstack([x, x + y]) for x, y in zip(self.base_points, self.displacements)]

    def verify(self, A: GridSet, simplices, tol: float = WITNESS_GRAM_TOL) -> bool:
        simplices = ensure_simplices(simplices)
        for s, y in zip(simplices, self.displacements):
            scale = max(1.0, float(np.abs(s.gram).max())) * self.lam ** 2
            if gram_residual(np.asarray(y), s, self.lam) > tol * scale:
                return False
        pts = [v[None] for v in self.vertices()]
        return bool(hyper_product(A, pts)[0])

    def to_record(self) -> dict:
        return {"lambda": self.lam,
                "base_points": [np.asarray(x).tolist() for x in self.base_points],
                "displacements": [np.asarray(y).tolist() for y in self.displacements]}


def witnesses_from_chunk(base: BaseDraw, hits: np.ndarray, lam: float, limit: int) -> list[Witness]:
    out = []
    for s in np.flatnonzero(hits)[:limit]:
        out.append(Witness(float(lam),
                           tuple(x[s].copy() for x in base.x0),
                           tuple(lam * y[s] for y in base.configs)))
    return out


def find_witnesses(A: GridSet, simplices, lam: float, samples: int, rng=None, limit: int = 1,
                   workers: int | None = None, sampler: str = SPHERE) -> list[Witness]:
    """Witnesses behind the positive samples of the eps = 0 estimator, in sample order."""
    found: dict = {}

    def grab(c, base, vals):
        ws = witnesses_from_chunk(base, vals[0], lam, limit)
        if ws:
            found[c] = ws

    form_samples(A, simplices, [(lam, 0.0)], samples, rng, workers, sampler, on_chunk=grab)
    return [w for c in sorted(found) for w in found[c]][:limit]


@dataclass(frozen=True)
class DecayPoint:
    epsilon: float
    difference: float
    stderr: float
    n0: float
    neps: float

    def significant(self) -> bool:
        return self.difference > 3.0 * self.stderr


def check_uniform_decay(A: GridSet, simplices, lam: float, eps_list: Sequence[float],
                        samples: int, rng=None, workers: int | None = None) -> list[DecayPoint]:
    """|N^0 - N^eps| for each eps, paired under common random numbers."""
    eps_list = [float(e) for e in eps_list]
    if any(not (0.0 < e <= 1.0) for e in eps_list):
        raise BadScale("every epsilon must lie in (0, 1]")
    if any(a <= b for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    vals = form_samples(A, simplices, [(lam, 0.0)] + [(lam, e) for e in eps_list],
                        samples, rng, workers).astype(np.int8)
    out = []
    for row, e in zip(vals[1:], eps_list):
        d = vals[0] - row
        se = float(d.std(ddof=1) / math.sqrt(d.size)) if d.size > 1 else 0.0
        out.append(DecayPoint(e, abs(float(d.mean())), se, float(vals[0].mean()), float(row.mean())))
    return out


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    if lx.size < 2:
        return float("nan")
    return float(np.polyfit(lx, ly, 1)[0])


def fit_decay_exponent(points: Sequence[DecayPoint]) -> float:
    """Exponent of |N^0 - N^eps| ~ eps^p fitted on the points above 3 sigma (nan if < 2)."""
    sig = [p for p in points if p.significant()]
    return loglog_slope([p.epsilon for p in sig], [p.difference for p in sig])
