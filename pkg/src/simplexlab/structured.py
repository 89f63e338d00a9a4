"""Exact dyadic computation of the structured-part lower bound.

For a grid set every quantity in the Jensen chain is a ratio of integers:

* the per-cube configuration integral
  avg over Q_1^(k_1+1) x ... x Q_n^(k_n+1) of prod_h 1_A(Pi_h x)
  equals S_Q / prod_i M_i^(k_i+1), where M_i = c^(k_i+1) is the number of grid
  cells in Q_i and S_Q counts the cell assignments for which every projected
  cell lies in A;
* the plain cube average is count_Q / prod_i M_i.

S_Q is computed by the factor recursion: enumerate cell tuples of one factor,
AND their slices, and recurse.  For two factors the last step is a matrix
product, which keeps desk-scale grids fast.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import BadScale, ResolutionTooCoarse
from .forms import FormEstimate, estimate_N
from .sets import GridSet
from .simplex import ProductShape

_CHUNK_ENTRIES = 2 ** 22
_INT64_SAFE = 2 ** 62


def dyadic_index(lam: float) -> int:
    """The positive integer m with lam in (2^-m, 2^(-m+1)]."""
    if not (0.0 < lam <= 1.0):
        raise BadScale(f"lambda must lie in (0, 1], got {lam}")
    lam = Fraction(lam)
    m = 1
    while Fraction(1, 2 ** m) >= lam:
        m += 1
    return m


@dataclass(frozen=True, eq=False)
class DyadicDecomposition:
    m: int
    shape: ProductShape
    cells_per_side: int
    blocks: np.ndarray  # (n_cubes, M_1, ..., M_n) bool
    counts: np.ndarray  # (n_cubes,) true cells per product cube

    @property
    def n_cubes(self) -> int:
        return self.blocks.shape[0]

    @property
    def cells_per_cube(self) -> int:
        return self.cells_per_side ** self.shape.point_dim

    def averages(self) -> list[Fraction]:
        return [Fraction(int(c), self.cells_per_cube) for c in self.counts]

    def total_measure(self) -> Fraction:
        """2^(-m(k+n)) * sum_Q average(Q); equals |A| exactly."""
        return Fraction(int(self.counts.sum()), self.n_cubes * self.cells_per_cube)


def decompose(A: GridSet, m: int) -> DyadicDecomposition:
    """Split A into the product dyadic cubes of side 2^-m."""
    R = A.resolution
    if 2 ** m > R:
        raise ResolutionTooCoarse(f"2^{m} exceeds the grid resolution {R}")
    c = R // 2 ** m
    d = A.dim
    # every axis -> (cube coordinate, coordinate inside cube)
    arr = A.cells.reshape(sum(((2 ** m, c) for _ in range(d)), ()))
    cube_axes = list(range(0, 2 * d, 2))
    inner_axes = list(range(1, 2 * d, 2))
    arr = arr.transpose(cube_axes + inner_axes)
    n_cubes = 2 ** (m * d)
    inner = [c ** fd for fd in A.shape.factor_dims]
    blocks = np.ascontiguousarray(arr).reshape([n_cubes] + inner)
    counts = blocks.reshape(n_cubes, -1).sum(axis=1)
    return DyadicDecomposition(m, A.shape, c, blocks, counts)


def _tuple_products(F: np.ndarray, p: int) -> np.ndarray:
    """Rows of F (B, M, N) multiplied over all ordered p-tuples: (B, M^p, N)."""
    B, M, N = F.shape
    out = F
    for _ in range(p - 1):
        out = (out[:, :, None, :] & F[:, None, :, :]).reshape(B, -1, N)
    return out


def _count_two(F: np.ndarray, pa: int, pb: int) -> list[int]:
    """sum over a in [M_a]^pa of (#{u : F[a_r, u] = 1 for all r})^pb, per batch entry."""
    B, Ma, Mb = F.shape
    width = Ma ** (pa - 1) * max(Mb, Ma)
    step = max(1, _CHUNK_ENTRIES // max(width, 1))
    safe = Ma ** pa * Mb ** pb < _INT64_SAFE
    out: list[int] = []
    Ff = F.astype(np.float64)
    for lo in range(0, B, step):
        blk = F[lo:lo + step]
        if pa > 1:
            P = _tuple_products(blk, pa - 1).astype(np.float64)
            cnt = np.matmul(P, np.swapaxes(Ff[lo:lo + step], 1, 2))
        else:
            cnt = blk.sum(axis=2, dtype=np.float64)[:, :, None]
        cnt = np.rint(cnt).astype(np.int64).reshape(cnt.shape[0], -1)
        if safe:
            out.extend(int(v) for v in (cnt ** pb).sum(axis=1))
        else:
            out.extend(sum(int(x) ** pb for x in row) for row in cnt)
    return out


def configuration_counts(blocks: np.ndarray, powers: Sequence[int]) -> list[int]:
    """S_Q for each cube: number of cell assignments with every Pi_h cell in A.

    ``blocks`` has shape (B, M_1, ..., M_n); ``powers[i] = k_i + 1``.
    """
    powers = tuple(int(p) for p in powers)
    n = len(powers)
    B = blocks.shape[0]
    if n == 1:
        cnt = blocks.sum(axis=1)
        return [int(c) ** powers[0] for c in cnt]
    if n == 2:
        Ma, Mb = blocks.shape[1], blocks.shape[2]
        pa, pb = powers
        # enumerate the side with the cheaper tuple set
        if Ma ** pa * Mb > Mb ** pb * Ma:
            return _count_two(np.swapaxes(blocks, 1, 2), pb, pa)
        return _count_two(blocks, pa, pb)
    # general recursion: enumerate tuples of factor 1
    M1 = blocks.shape[1]
    rest = blocks.shape[2:]
    out = []
    for b in range(B):
        G = blocks[b].reshape(M1, -1)
        T = _tuple_products(G[None], powers[0])[0]  # (M1^p1, prod rest)
        sub = configuration_counts(T.reshape((T.shape[0],) + rest), powers[1:])
        out.append(sum(sub))
    return out


@dataclass(frozen=True)
class CubeRow:
    index: int
    average: Fraction
    kappa_power: Fraction
    integral: Fraction


@dataclass(frozen=True, eq=False)
class JensenChain:
    """lhs >= power_mean >= rhs, all exact.

    lhs        = 2^(-m(k+n)) sum_Q (configuration integral over Q)
    power_mean = 2^(-m(k+n)) sum_Q average(Q)^kappa
    rhs        = |A|^kappa
    """

    m: int
    kappa: int
    lhs: Fraction
    power_mean: Fraction
    rhs: Fraction
    per_cube: tuple
    per_cube_ok: bool
    per_cube_equal: bool

    @property
    def holds(self) -> bool:
        return self.per_cube_ok and self.lhs >= self.power_mean >= self.rhs

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["cube", "average", "kappa_power", "integral"])
            for row in self.per_cube:
                w.writerow([row.index, row.average, row.kappa_power, row.integral])


def jensen_chain(A: GridSet, lam: float) -> JensenChain:
    m = dyadic_index(lam)
    dec = decompose(A, m)
    powers = A.shape.factor_dims
    kappa = A.shape.kappa
    S = configuration_counts(dec.blocks, powers)
    M = [dec.cells_per_side ** p for p in powers]
    denom_int = math.prod(Mi ** p for Mi, p in zip(M, powers))
    Mtot = dec.cells_per_cube

    rows, ok, equal = [], True, True
    for q, (s, cnt) in enumerate(zip(S, dec.counts)):
        cnt = int(cnt)
        lhs_q, rhs_q = s * Mtot ** kappa, cnt ** kappa * denom_int
        ok &= lhs_q >= rhs_q
        equal &= lhs_q == rhs_q
        avg = Fraction(cnt, Mtot)
        rows.append(CubeRow(q, avg, avg ** kappa, Fraction(s, denom_int)))

    nq = dec.n_cubes
    lhs = Fraction(sum(S), denom_int * nq)
    power_mean = Fraction(sum(int(c) ** kappa for c in dec.counts), Mtot ** kappa * nq)
    rhs = A.measure ** kappa
    return JensenChain(m, kappa, lhs, power_mean, rhs, tuple(rows), ok, equal)


@dataclass(frozen=True)
class StructuredFloor:
    estimate: FormEstimate
    floor: Fraction  # |A|^kappa

    def to_record(self) -> dict:
        rec = self.estimate.to_record()
        rec["jensen_floor"] = float(self.floor)
        return rec


def structured_floor(A: GridSet, simplices, lam: float, samples: int, rng=None,
                     workers: int | None = None) -> StructuredFloor:
    """N^1_lam(A) estimated alongside the exact floor |A|^kappa."""
    est = estimate_N(A, simplices, lam, 1.0, samples, rng, workers)
    return StructuredFloor(est, A.measure ** A.shape.kappa)
