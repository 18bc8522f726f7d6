"""Deterministic per-replica seeding and the replica worker pool.

Replica ``i`` of stream ``s`` under base seed ``b`` draws from
``numpy.random.SeedSequence(b, spawn_key=(s, i))`` fed to PCG64. The
derivation is counter-based, so a replica's randomness never depends on which
worker runs it or on how many replicas precede it.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

WORKERS_ENV = "CONNINT_WORKERS"

# fixed stream ids keep independent sub-experiments apart
STREAMS = {
    "ppp": 1,
    "theta": 2,
    "lambda_c": 3,
    "mu": 4,
    "typical": 5,
    "static": 6,
    "limit_n": 7,
    "critical": 8,
    "timeline": 9,
    "decorrelation": 10,
    "table": 11,
    "refine": 12,
}


def rng_for(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def replica_map(fn: Callable, items: Sequence | Iterable, workers: int | None = None) -> list:
    """``[fn(x) for x in items]`` on a process pool, results in item order."""
    items = list(items)
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


@dataclass
class RunningMoments:
    """Streaming mean/variance (Welford); merge in a fixed order for
    reproducible sums."""

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def push(self, x: float):
        self.n += 1
        delta = x - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (x - self.mean)

    def extend(self, xs):
        for x in xs:
            self.push(float(x))
        return self

    def merge(self, other: "RunningMoments") -> "RunningMoments":
        if other.n == 0:
            return self
        if self.n == 0:
            self.n, self.mean, self.m2 = other.n, other.mean, other.m2
            return self
        n = self.n + other.n
        delta = other.mean - self.mean
        self.mean += delta * other.n / n
        self.m2 += other.m2 + delta * delta * self.n * other.n / n
        self.n = n
        return self

    @property
    def variance(self) -> float:
        return self.m2 / (self.n - 1) if self.n > 1 else 0.0

    @property
    def std_error(self) -> float:
        return (self.variance / self.n) ** 0.5 if self.n > 1 else 0.0
