"""Counter-based random streams addressed by name.

A :class:`Stream` is a seed plus a path of labels.  The generator for a path
is a Philox instance keyed through :class:`numpy.random.SeedSequence`, so the
numbers drawn for ``Stream(7).child("N").child(3)`` do not depend on which
worker draws them or in which order chunks are processed.
"""
from __future__ import annotations

import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

#: Samples per chunk.  Fixed so that results never depend on the worker count.
CHUNK = 8192

WORKERS_ENV = "SIMPLEXLAB_WORKERS"


def _label(name) -> int:
    if isinstance(name, (int, np.integer)):
        return int(name)
    return zlib.crc32(str(name).encode("utf-8"))


@dataclass(frozen=True)
class Stream:
    seed: int
    path: tuple = ()

    def child(self, *names) -> "Stream":
        return Stream(self.seed, self.path + tuple(_label(n) for n in names))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(ss))

    @property
    def id(self) -> str:
        return ":".join([str(self.seed), *map(str, self.path)])


def as_stream(rng) -> Stream:
    """Accept a Stream, an int seed, or None (seed 0)."""
    if isinstance(rng, Stream):
        return rng
    if rng is None:
        return Stream(0)
    if isinstance(rng, (int, np.integer)):
        return Stream(int(rng))
    raise TypeError(f"expected Stream or int seed, got {type(rng).__name__}")


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def chunk_sizes(samples: int, chunk: int = CHUNK) -> list[int]:
    full, rest = divmod(samples, chunk)
    return [chunk] * full + ([rest] if rest else [])


def map_chunks(fn: Callable[[int, int], T], samples: int, workers: int | None = None,
               chunk: int = CHUNK) -> list[T]:
    """Evaluate ``fn(chunk_index, chunk_size)`` over all chunks, in chunk order."""
    sizes = chunk_sizes(samples, chunk)
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(sizes) <= 1:
        return [fn(i, m) for i, m in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(len(sizes)), sizes))


def concat(parts: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate(parts) if parts else np.zeros(0)
