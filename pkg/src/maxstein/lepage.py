"""de Haan-LePage configurations, partial maxima and the coupled truncation error.

With a discrete angular measure every point carries one of ``K`` marks, and
radii come in decreasing order, so the first point bearing mark ``k``
dominates all later points with that mark. The partial maximum ``m_n`` is
therefore determined by the first-occurrence index of each mark and the
radius there. :func:`sample_records` simulates exactly that information
(geometric waiting times between new marks, gamma increments of the
arrival process) without generating the dominated points; the dense
simulator is kept as an independent route.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special

from .measures import MaxStableLaw
from .sampling import Estimate, RngStream, arrival_radii_from, map_blocks, mean_and_se, uniforms


class Label(str, Enum):
    LT = "LT"
    EQ = "EQ"
    GT = "GT"


@dataclass(frozen=True, eq=False)
class LePageConfiguration:
    """Points ``(r_i, v_i)`` sorted by strictly decreasing radius.

    ``atoms[i]`` indexes the angular atom carried by point ``i``; the stored
    marks are the transformed atoms ``u**(1/alpha)``.
    """

    radii: np.ndarray
    atoms: np.ndarray
    law: MaxStableLaw

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        a = np.asarray(self.atoms, dtype=int)
        if r.ndim != 1 or r.shape != a.shape or r.size == 0:
            raise ValueError("radii and atom indices must be matching nonempty 1-d arrays")
        if np.any(r <= 0) or np.any(np.diff(r) >= 0):
            raise ValueError("radii must be positive and strictly decreasing")
        if np.any((a < 0) | (a >= len(self.law.angular))):
            raise ValueError("atom index out of range")
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "atoms", a)

    @classmethod
    def from_points(cls, points, law: MaxStableLaw) -> "LePageConfiguration":
        """Build from ``(r, u)`` pairs with ``u`` an atom of ``law`` (untransformed)."""
        pts = sorted(points, key=lambda p: -p[0])
        radii = [p[0] for p in pts]
        atoms = []
        for _, u in pts:
            dist = np.max(np.abs(law.angular.points - np.asarray(u, dtype=float)), axis=1)
            k = int(np.argmin(dist))
            if dist[k] > 1e-12:
                raise ValueError(f"{u} is not an atom of the angular measure")
            atoms.append(k)
        return cls(np.array(radii), np.array(atoms), law)

    @property
    def alpha(self) -> float:
        return self.law.alpha

    @property
    def marks(self) -> np.ndarray:
        return self.law.marks()[self.atoms]

    def scaled(self) -> np.ndarray:
        """The points ``r_i v_i`` as an ``(n, d)`` array."""
        return self.radii[:, None] * self.marks

    def __len__(self):
        return self.radii.size


def sample_configuration(law: MaxStableLaw, rng: RngStream, n: int) -> LePageConfiguration:
    gen = rng.generator()
    radii = arrival_radii_from(gen, law.angular.total_mass, law.alpha, n)
    atoms = _draw_atoms(law, uniforms(gen, n))
    return LePageConfiguration(radii, atoms, law)


def _draw_atoms(law: MaxStableLaw, u: np.ndarray) -> np.ndarray:
    w = law.angular.weights
    cum = np.cumsum(w) / w.sum()
    return np.minimum(np.searchsorted(cum, u, side="left"), len(w) - 1)


def partial_max(cfg: LePageConfiguration, n: int) -> np.ndarray:
    """``m_n = max_{i <= n} r_i v_i`` (componentwise)."""
    if not 1 <= n <= len(cfg):
        raise ValueError(f"n must lie in [1, {len(cfg)}], got {n}")
    return cfg.scaled()[:n].max(axis=0)


def classify_points(cfg: LePageConfiguration, n: int) -> list[Label]:
    """Label each point against ``m_n``.

    EQ: the point is the first to attain some nonzero coordinate of ``m_n``.
    GT: the point exceeds ``m_n`` in some coordinate.
    LT: everything else, i.e. below ``m_n``, strictly wherever ``m_n`` is nonzero.
    """
    y = cfg.scaled()
    m = partial_max(cfg, n)
    labels = [Label.LT] * len(cfg)
    for j in range(y.shape[1]):
        if m[j] != 0:
            # the attaining point is among the first n; ties go to the smallest index
            i = int(np.flatnonzero(y[:n, j] == m[j])[0])
            labels[i] = Label.EQ
    above = np.any(y > m, axis=1)
    for i in np.flatnonzero(above):
        labels[i] = Label.GT
    return labels


# exact first-occurrence simulation --------------------------------------------

def records_from(gen: np.random.Generator, law: MaxStableLaw, reps: int, big_n: int):
    """Index and radius of the first point bearing each atom, for ``reps`` configurations.

    Returns ``(first, radius)`` of shape ``(reps, K)``. Atoms that do not show
    up among the first ``big_n`` points get ``first = inf`` and radius 0.
    """
    w = law.angular.weights
    lam = w.sum()
    p = w / lam
    k_atoms = len(w)
    steps = int(np.count_nonzero(p > 0))
    seen = np.zeros((reps, k_atoms), dtype=bool)
    first = np.full((reps, k_atoms), np.inf)
    radius = np.zeros((reps, k_atoms))
    pos = np.zeros(reps)
    gam = np.zeros(reps)
    alive = np.ones(reps, dtype=bool)
    rows = np.arange(reps)
    for _ in range(steps):
        u = uniforms(gen, (3, reps))
        q_seen = np.where(seen, p, 0.0).sum(axis=1)
        # log of the seen mass via the unseen mass, which stays accurate when it is tiny
        with np.errstate(divide="ignore"):
            log_seen = np.log1p(-np.where(seen, 0.0, p).sum(axis=1))
            wait = np.where(q_seen > 0, np.floor(np.log(u[0]) / np.where(q_seen > 0, log_seen, -1.0)) + 1, 1.0)
        wait = np.minimum(wait, big_n + 1.0)
        idx = pos + wait
        cand = np.where(seen, 0.0, p)
        cum = np.cumsum(cand, axis=1)
        target = u[1] * cum[:, -1]
        k = np.minimum((cum <= target[:, None]).sum(axis=1), k_atoms - 1)
        # guard against landing on an already seen atom through rounding
        k = np.where(cand[rows, k] > 0, k, np.argmax(cand, axis=1))
        step_gamma = special.gammaincinv(wait, u[2])
        ok = alive & (idx <= big_n)
        gam = np.where(ok, gam + step_gamma, gam)
        first[rows[ok], k[ok]] = idx[ok]
        radius[rows[ok], k[ok]] = (gam[ok] / lam) ** (-1.0 / law.alpha)
        seen[rows[ok], k[ok]] = True
        pos = np.where(ok, idx, pos)
        alive = ok
    return first, radius


def sample_records(law: MaxStableLaw, rng: RngStream, reps: int, big_n: int, threads=None):
    parts = map_blocks(lambda s, m: records_from(s.generator(), law, m, big_n), rng, reps, threads=threads)
    return np.concatenate([f for f, _ in parts]), np.concatenate([r for _, r in parts])


def maxima_from_records(law: MaxStableLaw, first: np.ndarray, radius: np.ndarray, n: int) -> np.ndarray:
    """``m_n`` for every replicate, shape ``(reps, d)``."""
    marks = law.marks()
    r = np.where(first <= n, radius, 0.0)
    return np.max(r[:, :, None] * marks[None, :, :], axis=1)


def dense_maxima(law: MaxStableLaw, rng: RngStream, reps: int, big_n: int, ns, chunk: int = 256):
    """Partial maxima at each ``n`` in ``ns`` from fully simulated configurations.

    Returns an array of shape ``(len(ns), reps, d)``; cost is ``reps * big_n``.
    """
    ns = list(ns)
    if max(ns) > big_n:
        raise ValueError("requested n beyond the simulated configuration length")
    marks = law.marks()
    lam = law.angular.total_mass

    def block(stream, m):
        gen = stream.generator()
        out = np.empty((len(ns), m, law.dimension))
        for s in range(0, m, chunk):
            c = min(chunk, m - s)
            radii = arrival_radii_from(gen, lam, law.alpha, (c, big_n))
            atoms = _draw_atoms(law, uniforms(gen, (c, big_n)))
            pm = np.maximum.accumulate(radii[:, :, None] * marks[atoms], axis=1)
            for i, n in enumerate(ns):
                out[i, s:s + c] = pm[:, n - 1]
        return out

    return np.concatenate(map_blocks(block, rng, reps, block=4096), axis=1)


def coupled_errors(law: MaxStableLaw, ns, big_n: int, rng: RngStream, reps: int, method: str = "records"):
    """Per-replicate ``||m_n - m_big_n||_1`` for each ``n``; shape ``(len(ns), reps)``."""
    ns = [int(n) for n in ns]
    if any(n >= big_n for n in ns):
        raise ValueError("truncation level n must be smaller than big_n")
    if any(n < 1 for n in ns):
        raise ValueError("truncation level n must be >= 1")
    if method == "records":
        first, radius = sample_records(law, rng, reps, big_n)
        full = maxima_from_records(law, first, radius, big_n)
        return np.stack([np.abs(full - maxima_from_records(law, first, radius, n)).sum(axis=1) for n in ns])
    if method == "dense":
        pm = dense_maxima(law, rng, reps, big_n, ns + [big_n])
        return np.abs(pm[-1][None] - pm[:-1]).sum(axis=2)
    raise ValueError(f"unknown method {method!r}")


def coupled_truncation_error(law: MaxStableLaw, n: int, big_n: int, rng: RngStream, reps: int,
                             method: str = "records") -> Estimate:
    """Mean and standard error of ``||m_n(eta) - m_big_n(eta)||_1`` on shared configurations."""
    return mean_and_se(coupled_errors(law, [n], big_n, rng, reps, method)[0])
