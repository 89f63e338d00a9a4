"""Scale schedule and the search for lambda-intervals of configurations."""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import BadDelta, ScaleTooLarge
from .forms import FormEstimate, Witness, estimate_from_samples, form_samples, witnesses_from_chunk
from .rng import as_stream
from .sampling import haar_configurations
from .sets import GridSet
from .simplex import ProductShape, ensure_simplices, product_shape


def _exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class Schedule:
    delta: Fraction
    C1: Fraction
    C2: Fraction
    C3: Fraction
    kappa: int
    varrho: int
    n: int
    epsilon: Fraction
    J: int

    @property
    def log2_J(self) -> float:
        return math.log2(self.J) if self.J < 2 ** 1000 else self.J.bit_length() - 1.0

    def to_record(self) -> dict:
        return {"delta": str(self.delta), "C1": str(self.C1), "C2": str(self.C2), "C3": str(self.C3),
                "kappa": self.kappa, "varrho": self.varrho, "n": self.n,
                "epsilon": str(self.epsilon), "epsilon_float": float(self.epsilon),
                "J": str(self.J), "J_digits": len(str(self.J)), "log2_J": self.log2_J}


def schedule(delta, shape: ProductShape, C1=1, C2=1, C3=1) -> Schedule:
    """eps = (C1 delta^kappa)^2 (3 C3)^-2 and J = floor((3 C2 / C1 eps^-(varrho+1) delta^-kappa)^(2^n)) + 1.

    Evaluated in exact rational arithmetic; J is an arbitrary-precision int.
    """
    d = _exact(delta)
    if not (0 < d <= Fraction(1, 2)):
        raise BadDelta(f"delta must lie in (0, 1/2], got {delta}")
    c1, c2, c3 = _exact(C1), _exact(C2), _exact(C3)
    if not (0 < c1 <= 1) or c2 < 1 or c3 < 1:
        raise ValueError("need C1 in (0, 1] and C2, C3 >= 1")
    kappa, varrho, n = shape.kappa, shape.varrho, shape.n
    eps = (c1 * d ** kappa) ** 2 / (3 * c3) ** 2
    base = 3 * c2 / c1 * eps ** -(varrho + 1) * d ** -kappa
    J = math.floor(base ** (2 ** n)) + 1
    return Schedule(d, c1, c2, c3, kappa, varrho, n, eps, J)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_index: int
    hi_index: int
    min_value: float
    witnesses: int


@dataclass(eq=False)
class ScanReport:
    lambdas: tuple
    estimates: tuple
    detected: tuple
    witnesses: dict  # grid index -> list[Witness]
    intervals: tuple
    schedule: Schedule | None = None
    witnesses_verified: bool = True

    def to_record(self) -> dict:
        return {
            "lambdas": list(self.lambdas),
            "estimates": [e.to_record() for e in self.estimates],
            "detected": list(self.detected),
            "intervals": [vars(iv) for iv in self.intervals],
            "witnesses": {str(i): [w.to_record() for w in ws] for i, ws in sorted(self.witnesses.items())},
            "witnesses_verified": self.witnesses_verified,
            "schedule": self.schedule.to_record() if self.schedule else None,
        }

    def write_intervals_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lambda_lo", "lambda_hi", "min_value", "witnesses"])
            for iv in self.intervals:
                w.writerow([repr(iv.lo), repr(iv.hi), repr(iv.min_value), iv.witnesses])


def lambda_grid(lambda_min: float, lambda_max: float, points: int) -> np.ndarray:
    if not (0 < lambda_min < lambda_max <= 1):
        raise ValueError("need 0 < lambda_min < lambda_max <= 1")
    if points < 2:
        raise ValueError("need at least two grid points")
    return np.geomspace(lambda_min, lambda_max, points)


def maximal_runs(flags: Sequence[bool]) -> list[tuple[int, int]]:
    runs = []
    for key, grp in itertools.groupby(enumerate(flags), key=lambda t: t[1]):
        if key:
            idx = [i for i, _ in grp]
            runs.append((idx[0], idx[-1]))
    return runs


def scan_lambda(A: GridSet, simplices, lambda_min: float, lambda_max: float, grid_points: int,
                samples: int, rng=None, workers: int | None = None, max_witnesses: int = 3,
                sched: Schedule | None = None) -> ScanReport:
    """Estimate N^0 along a geometric lambda-grid with common random numbers.

    A grid point is detected when the estimate exceeds 3 stderr or an exact
    witness was found; intervals are the maximal detected runs.
    """
    simplices = ensure_simplices(simplices)
    lams = lambda_grid(lambda_min, lambda_max, grid_points)
    stream = as_stream(rng)
    found: dict = {}

    def grab(c, base, vals):
        for g, row in enumerate(vals):
            ws = witnesses_from_chunk(base, row, lams[g], max_witnesses)
            if ws:
                found.setdefault(g, {})[c] = ws

    vals = form_samples(A, simplices, [(float(l), 0.0) for l in lams], samples, stream,
                        workers, on_chunk=grab)
    witnesses = {g: [w for c in sorted(d) for w in d[c]][:max_witnesses] for g, d in found.items()}
    verified = all(w.verify(A, simplices) for ws in witnesses.values() for w in ws)
    estimates = tuple(estimate_from_samples(row, stream.id, form="N", lam=float(l), epsilon=0.0)
                      for row, l in zip(vals, lams))
    detected = tuple(bool(e.positive() or g in witnesses) for g, e in enumerate(estimates))
    intervals = tuple(
        Interval(float(lams[a]), float(lams[b]), a, b,
                 min(estimates[i].value for i in range(a, b + 1)),
                 sum(len(witnesses.get(i, ())) for i in range(a, b + 1)))
        for a, b in maximal_runs(detected))
    return ScanReport(tuple(map(float, lams)), estimates, detected, witnesses, intervals,
                      sched, verified)


def witness_oracle(A: GridSet, simplices, lam: float, rotation_samples: int = 200,
                   base_grid: int = 32, seed=0) -> Witness | None:
    """Exhaustive base grid x random rotations; the first exact witness or None.

    Base points are the centres of a ``base_grid``-per-axis lattice; each
    rotation sample rotates every factor's simplex by an independent Haar
    rotation.
    """
    simplices = ensure_simplices(simplices)
    shape = product_shape(simplices)
    if shape.point_dim > 4 or base_grid > 64:
        raise ScaleTooLarge("witness oracle is limited to k+n <= 4 and base_grid <= 64")
    if A.shape != shape:
        raise ValueError("set shape does not match the simplices")
    centers = (np.arange(base_grid) + 0.5) / base_grid
    bases = [np.stack(np.meshgrid(*([centers] * d), indexing="ij"), -1).reshape(-1, d)
             for d in shape.factor_dims]
    stream = as_stream(seed).child("oracle")
    R = A.resolution
    cells = A.cells
    for t in range(rotation_samples):
        ys = [lam * haar_configurations(s, 1, stream.child(t, i))[0] for i, s in enumerate(simplices)]
        # per factor: cell index of every (base point, vertex) pair, -1 when outside the cube
        idx = []
        for b, y in zip(bases, ys):
            pts = np.concatenate([b[:, None, :], b[:, None, :] + y[None]], axis=1)
            inside = np.all((pts >= 0) & (pts <= 1), axis=-1)
            ci = np.clip(np.floor(pts * R), 0, R - 1).astype(np.intp)
            idx.append((ci, inside))
        ok = None
        for h in itertools.product(*(range(s.k + 1) for s in simplices)):
            grids = np.ix_(*[np.arange(len(b)) for b in bases])
            coords, inside = [], None
            for i, (ci, ins) in enumerate(idx):
                sel = ins[:, h[i]]
                shp = [1] * len(bases)
                shp[i] = -1
                sel = sel.reshape(shp)
                inside = sel if inside is None else inside & sel
                for c in range(ci.shape[-1]):
                    coords.append(ci[:, h[i], c].reshape(shp))
            term = inside & cells[tuple(coords)]
            ok = term if ok is None else ok & term
            if not ok.any():
                break
        if ok is not None and ok.any():
            pick = np.unravel_index(int(np.flatnonzero(ok)[0]), ok.shape)
            w = Witness(float(lam), tuple(bases[i][pick[i]].copy() for i in range(len(bases))),
                        tuple(ys))
            if w.verify(A, simplices):
                return w
    return None


def oracle_feasible(A: GridSet, simplices, lambdas: Sequence[float], rotation_samples: int = 200,
                    base_grid: int = 32, seed=0) -> list[bool]:
    return [witness_oracle(A, simplices, lam, rotation_samples, base_grid, as_stream(seed).child(g))
            is not None for g, lam in enumerate(lambdas)]
