"""Grid-measurable subsets of the unit cube [0,1]^(k+n).

A set is a union of cells of a uniform power-of-two grid, so its measure,
dyadic cube averages and membership are all exact.  Axes are laid out factor
by factor: the first ``k_1 + 1`` axes belong to factor 1, and so on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .errors import InfeasibleDensity
from .rng import as_stream
from .simplex import ProductShape

MAX_RESOLUTION = 2 ** 10
MAX_CELLS = 2 ** 26


@dataclass(frozen=True, eq=False)
class GridSet:
    shape: ProductShape
    resolution: int
    cells: np.ndarray

    def __post_init__(self):
        self.cells.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.shape.point_dim

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.cells))

    @property
    def measure(self) -> Fraction:
        return Fraction(self.count, self.cells.size)

    @property
    def density(self) -> float:
        return self.count / self.cells.size

    def contains(self, points) -> np.ndarray:
        """Vectorised membership for points of shape (..., k+n)."""
        p = np.asarray(points, dtype=float)
        R = self.resolution
        inside = np.all((p >= 0.0) & (p <= 1.0), axis=-1)
        idx = np.clip(np.floor(np.where(np.isfinite(p), p, 0.0) * R), 0, R - 1).astype(np.intp)
        flat = np.ravel_multi_index(tuple(np.moveaxis(idx, -1, 0)), self.cells.shape)
        return inside & self.cells.ravel()[flat]

    def __or__(self, other: "GridSet") -> "GridSet":
        _compatible(self, other)
        return GridSet(self.shape, self.resolution, self.cells | other.cells)

    def __and__(self, other: "GridSet") -> "GridSet":
        _compatible(self, other)
        return GridSet(self.shape, self.resolution, self.cells & other.cells)

    def issubset(self, other: "GridSet") -> bool:
        _compatible(self, other)
        return not np.any(self.cells & ~other.cells)

    def to_runs(self) -> list[list[int]]:
        return encode_runs(self.cells)


def _compatible(a: GridSet, b: GridSet):
    if a.shape != b.shape or a.resolution != b.resolution:
        raise ValueError("sets live on different grids")


def membership(gset: GridSet, point) -> bool:
    return bool(gset.contains(np.asarray(point, dtype=float)))


def _grid_shape(shape: ProductShape, resolution: int) -> tuple:
    R = int(resolution)
    if R < 2 or R > MAX_RESOLUTION or R & (R - 1):
        raise ValueError(f"resolution must be a power of two in [2, {MAX_RESOLUTION}], got {resolution}")
    if R ** shape.point_dim > MAX_CELLS:
        raise ValueError(f"grid {R}^{shape.point_dim} exceeds {MAX_CELLS} cells")
    return (R,) * shape.point_dim


def _check_delta(delta):
    if not (0.0 < delta <= 1.0):
        raise InfeasibleDensity(f"delta must lie in (0, 1], got {delta}")


def _check_achieved(achieved: float, delta: float, shape: ProductShape, R: int):
    if abs(achieved - delta) > 2.0 * shape.point_dim / R:
        raise InfeasibleDensity(
            f"density {delta} not reachable at resolution {R} (closest {achieved:.4g})")


def full(shape: ProductShape, resolution: int) -> GridSet:
    return GridSet(shape, resolution, np.ones(_grid_shape(shape, resolution), dtype=bool))


def empty(shape: ProductShape, resolution: int) -> GridSet:
    return GridSet(shape, resolution, np.zeros(_grid_shape(shape, resolution), dtype=bool))


def subcube(shape: ProductShape, resolution: int, delta: float) -> GridSet:
    """Corner box [0, c/R)^(k+n) with c^(k+n)/R^(k+n) as close to delta as the grid allows."""
    _check_delta(delta)
    gshape = _grid_shape(shape, resolution)
    R, d = int(resolution), shape.point_dim
    c = min(R, max(1, round(delta ** (1.0 / d) * R)))
    _check_achieved((c / R) ** d, delta, shape, R)
    cells = np.zeros(gshape, dtype=bool)
    cells[(slice(0, c),) * d] = True
    return GridSet(shape, R, cells)


def random_set(shape: ProductShape, resolution: int, delta: float, seed: int = 0) -> GridSet:
    """Each cell kept independently with probability delta."""
    _check_delta(delta)
    gshape = _grid_shape(shape, resolution)
    gen = as_stream(seed).child("set", "random").generator()
    cells = gen.random(gshape) < delta
    out = GridSet(shape, int(resolution), cells)
    _check_achieved(out.density, delta, shape, int(resolution))
    return out


def shell(shape: ProductShape, resolution: int, width: float, period: float) -> GridSet:
    """Cells whose centre has squared norm within ``width`` of a multiple of ``period``."""
    if not (width >= 0 and period > 0):
        raise ValueError("shell needs width >= 0 and period > 0")
    gshape = _grid_shape(shape, resolution)
    R = int(resolution)
    centers = (np.arange(R) + 0.5) / R
    sq = np.zeros(gshape)
    for ax in range(len(gshape)):
        view = [1] * len(gshape)
        view[ax] = R
        sq = sq + (centers ** 2).reshape(view)
    dist = np.abs(sq - period * np.round(sq / period))
    return GridSet(shape, R, dist <= width)


def explicit(shape: ProductShape, resolution: int, cells: Iterable = (), runs: Iterable = ()) -> GridSet:
    """Set from a list of cell multi-indices and/or run-length pairs [start, length]."""
    gshape = _grid_shape(shape, resolution)
    flat = np.zeros(math.prod(gshape), dtype=bool)
    for start, length in runs:
        start, length = int(start), int(length)
        if start < 0 or length < 0 or start + length > flat.size:
            raise ValueError(f"run [{start}, {length}] outside grid")
        flat[start:start + length] = True
    idx = [tuple(int(i) for i in c) for c in cells]
    if idx:
        arr = np.array(idx)
        if arr.shape[1] != len(gshape) or arr.min() < 0 or arr.max() >= resolution:
            raise ValueError("cell index outside grid")
        flat[np.ravel_multi_index(tuple(arr.T), gshape)] = True
    return GridSet(shape, int(resolution), flat.reshape(gshape))


def encode_runs(cells: np.ndarray) -> list[list[int]]:
    """Run-length encoding of the true cells in C order."""
    flat = np.concatenate([[False], cells.ravel(), [False]]).astype(np.int8)
    edges = np.flatnonzero(np.diff(flat))
    starts, stops = edges[0::2], edges[1::2]
    return [[int(a), int(b - a)] for a, b in zip(starts, stops)]


def build(spec, shape: ProductShape, resolution: int) -> GridSet:
    """Build a set from a kind name or a mapping ``{"kind": ..., **params}``.

    Kinds: full, empty, subcube(delta), random(delta, seed), shell(width, period),
    explicit(cells and/or runs).
    """
    if isinstance(spec, str):
        spec = {"kind": spec}
    if not isinstance(spec, Mapping):
        raise TypeError("set spec must be a kind name or a mapping")
    params = dict(spec)
    kind = params.pop("kind")
    makers = {
        "full": full,
        "empty": empty,
        "subcube": subcube,
        "random": random_set,
        "shell": shell,
        "explicit": explicit,
    }
    if kind not in makers:
        raise ValueError(f"unknown set kind {kind!r}")
    return makers[kind](shape, resolution, **params)
