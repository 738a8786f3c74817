"""Seeded random generation: Frechet variates, arrival radii, exact max-stable draws.

Every variate is produced by quantile inversion from uniforms, so each draw
consumes a fixed number of uniforms. Streams are counter-based (Philox)
keyed by ``(seed, stream_id)``; large replicate counts are cut into
fixed-size blocks, block ``i`` using the child stream ``i``. Results
therefore do not depend on how many worker threads process the blocks.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .measures import MaxStableLaw

BLOCK = 1 << 16
THREADS_ENV = "MAXSTEIN_THREADS"


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0
    path: tuple = ()

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=[self.seed & (2**64 - 1), self.stream_id & (2**64 - 1)],
                                    spawn_key=self.path)
        return np.random.Generator(np.random.Philox(ss))

    def child(self, i: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, self.path + (int(i),))

    def uniforms(self, size) -> np.ndarray:
        """Uniforms strictly inside (0, 1)."""
        return uniforms(self.generator(), size)


def uniforms(gen: np.random.Generator, size) -> np.ndarray:
    # random() returns k / 2**53; shifting by half a step keeps 0 and 1 out
    return gen.random(size) + 2.0**-54


@dataclass(frozen=True)
class FrechetParams:
    alpha: float
    sigma: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.sigma > 0):
            raise ValueError("Frechet parameters must be positive")


def default_threads() -> int:
    return max(1, int(os.environ.get(THREADS_ENV, "1")))


def map_blocks(fn, stream: RngStream, reps: int, block: int = BLOCK, threads: int | None = None):
    """Apply ``fn(child_stream, size)`` to consecutive replicate blocks.

    Returns the per-block results in block order. The split depends only on
    ``reps`` and ``block``, never on ``threads``.
    """
    sizes = [min(block, reps - s) for s in range(0, reps, block)]
    jobs = [(stream.child(i), n) for i, n in enumerate(sizes)]
    threads = default_threads() if threads is None else threads
    if threads <= 1 or len(jobs) <= 1:
        return [fn(s, n) for s, n in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def frechet_cdf(p: FrechetParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(x > 0, np.exp(-(p.sigma / np.where(x > 0, x, 1.0)) ** p.alpha), 0.0)


def frechet_quantile(p: FrechetParams, q) -> np.ndarray | float:
    """``sigma * (-log q)^(-1/alpha)`` for ``q`` in (0, 1)."""
    q = np.asarray(q, dtype=float)
    if np.any((q <= 0) | (q >= 1)):
        raise ValueError("quantile level must lie strictly inside (0, 1)")
    out = p.sigma * (-np.log(q)) ** (-1.0 / p.alpha)
    return float(out) if out.ndim == 0 else out


def sample_frechet(p: FrechetParams, rng: RngStream, n: int) -> np.ndarray:
    if n < 0:
        raise ValueError("sample size must be nonnegative")
    if n == 0:
        return np.empty(0)
    return frechet_quantile(p, rng.uniforms(n))


def arrival_radii_from(gen: np.random.Generator, total_mass: float, alpha: float, shape) -> np.ndarray:
    """Decreasing radii of a Poisson process with intensity ``total_mass * alpha r^-(alpha+1) dr``.

    ``shape`` is ``(..., n)``; radii decrease along the last axis.
    """
    e = -np.log(uniforms(gen, shape))
    gam = np.cumsum(e, axis=-1)
    return (gam / total_mass) ** (-1.0 / alpha)


def sample_arrival_radii(law: MaxStableLaw, rng: RngStream, n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("need at least one radius")
    return arrival_radii_from(rng.generator(), law.angular.total_mass, law.alpha, n)


def exact_from(gen: np.random.Generator, law: MaxStableLaw, n: int) -> np.ndarray:
    """Exact draws ``max_k R_k u_k^(1/alpha)`` with ``R_k ~ Frechet(alpha, w_k^(1/alpha))``."""
    marks = law.marks()
    w = law.angular.weights
    # one uniform per atom per draw, including zero-weight atoms, keeps streams aligned
    e = -np.log(uniforms(gen, (n, len(w))))
    with np.errstate(divide="ignore"):
        radii = (e / w) ** (-1.0 / law.alpha)
    return np.max(radii[:, :, None] * marks[None, :, :], axis=1)


def sample_exact(law: MaxStableLaw, rng: RngStream, n: int, threads: int | None = None) -> np.ndarray:
    """``n`` i.i.d. draws of MS(alpha, nu), shape ``(n, d)``."""
    if n < 0:
        raise ValueError("sample size must be nonnegative")
    if n == 0:
        return np.empty((0, law.dimension))
    parts = map_blocks(lambda s, m: exact_from(s.generator(), law, m), rng, n, threads=threads)
    return np.concatenate(parts, axis=0)


class Estimate(NamedTuple):
    value: float
    std_error: float


def mean_and_se(values: np.ndarray) -> Estimate:
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    if n == 0:
        raise ValueError("no values")
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return Estimate(mean, se)
