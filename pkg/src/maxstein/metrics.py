"""Distances between max-stable laws, and between samples and laws.

Kolmogorov distances between two laws use exact CDFs on a log grid with
local refinement around the maximiser, so the returned value is a certified
lower bound on the supremum. Wasserstein-type distances are bracketed: the
coupling of the truncated series gives an upper bound, a finite certified
bank of test functions a lower bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lepage import coupled_truncation_error
from .measures import MaxStableLaw, cdf
from .sampling import Estimate, RngStream
from .testfunctions import LIP1, LIP2, TestFunctionBank


@dataclass(frozen=True)
class GridSpec:
    """Log grid in each axis, expressed through the marginal exponent ``s = z^-alpha``.

    Nodes span ``s`` in ``[s_min, s_max]`` for the smaller alpha of the pair,
    which covers the region where the marginal CDF moves between
    ``e^{-s_max}`` and ``e^{-s_min}``; a node at ``+inf`` is always added.
    """

    nodes: int = 64
    s_min: float = 1e-4
    s_max: float = 40.0
    refine_depth: int = 8
    refine_nodes: int = 9

    def __post_init__(self):
        if self.nodes < 2 or self.refine_nodes < 2:
            raise ValueError("need at least two nodes per axis")
        if not 0 < self.s_min < self.s_max:
            raise ValueError("need 0 < s_min < s_max")
        if self.refine_depth < 0:
            raise ValueError("refinement depth must be nonnegative")


def _axis(alpha: float, g: GridSpec) -> np.ndarray:
    s = np.geomspace(g.s_max, g.s_min, g.nodes)
    return np.concatenate([s ** (-1.0 / alpha), [np.inf]])


def _gap(l1, l2, pts):
    return np.abs(cdf(l1, pts) - cdf(l2, pts))


def kolmogorov_between_laws(l1: MaxStableLaw, l2: MaxStableLaw, grid: GridSpec = GridSpec()):
    """Grid supremum of ``|F_1 - F_2|`` and the point where it is attained."""
    if l1.dimension != l2.dimension:
        raise ValueError("laws live in different dimensions")
    d = l1.dimension
    axis = _axis(min(l1.alpha, l2.alpha), grid)
    mesh = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    gaps = _gap(l1, l2, mesh)
    k = int(np.argmax(gaps))
    best, arg = float(gaps[k]), mesh[k].copy()
    # local refinement in log coordinates; each level zooms around the current maximiser
    fin = np.isfinite(axis)
    step = np.log(axis[fin][1] / axis[fin][0])
    for _ in range(grid.refine_depth):
        offsets = np.linspace(-step, step, grid.refine_nodes)
        per_axis = []
        for j in range(d):
            if np.isfinite(arg[j]):
                per_axis.append(arg[j] * np.exp(offsets))
            else:
                per_axis.append(np.concatenate([axis[fin][-1:] * np.exp(offsets[offsets > 0]), [np.inf]]))
        local = np.stack(np.meshgrid(*per_axis, indexing="ij"), axis=-1).reshape(-1, d)
        g = _gap(l1, l2, local)
        k = int(np.argmax(g))
        if g[k] > best:
            best, arg = float(g[k]), local[k].copy()
        step *= 2.0 / (grid.refine_nodes - 1)
    return best, arg


def _dominance_counts(x: np.ndarray, strict: bool) -> np.ndarray:
    """For each row ``i``, the number of rows ``k`` with ``x_k <= x_i`` (or ``<`` if strict) componentwise."""
    n, d = x.shape
    if d == 1:
        s = np.sort(x[:, 0])
        return np.searchsorted(s, x[:, 0], side="left" if strict else "right")
    if d == 2:
        return _dominance_2d(x, strict)
    out = np.empty(n, dtype=np.int64)
    for s in range(0, n, 512):
        blk = x[s:s + 512]
        cmp = (x[None, :, :] < blk[:, None, :]) if strict else (x[None, :, :] <= blk[:, None, :])
        out[s:s + 512] = np.all(cmp, axis=2).sum(axis=1)
    return out


def _dominance_2d(x, strict):
    from ._kernels import dominance_2d

    ranks = np.searchsorted(np.unique(x[:, 1]), x[:, 1]).astype(np.int64)
    order = np.lexsort((x[:, 1], x[:, 0])).astype(np.int64)
    return dominance_2d(order, np.ascontiguousarray(x[:, 0]), ranks, int(ranks.max()) + 1, strict)


def kolmogorov_sample_vs_law(sample, law: MaxStableLaw) -> float:
    """``max_i`` of ``|F_n - F|`` at each sample point and at its lower-left limit."""
    x = np.atleast_2d(np.asarray(sample, dtype=float))
    if x.shape[0] == 0:
        raise ValueError("empty sample")
    if x.shape[1] != law.dimension:
        raise ValueError("sample dimension does not match the law")
    n = x.shape[0]
    f = cdf(law, x)
    upper = _dominance_counts(x, strict=False) / n
    lower = _dominance_counts(x, strict=True) / n
    return float(max(np.max(np.abs(upper - f)), np.max(np.abs(lower - f))))


def wasserstein_coupled_upper(law: MaxStableLaw, n: int, big_n: int, rng: RngStream, reps: int) -> Estimate:
    """``E||m_n - m_big_n||_1`` on shared configurations, an upper bound on ``d_W(Z_n, Z)``."""
    law.require_alpha_above_one("the Wasserstein bound")
    if n == big_n:
        return Estimate(0.0, 0.0)
    return coupled_truncation_error(law, n, big_n, rng, reps)


@dataclass(frozen=True)
class BankGap:
    name: str
    gap: float
    std_error: float


def ipm_lower_bound(sample1, sample2, bank: TestFunctionBank, level: str = LIP1, paired: bool = False):
    """``max_h |mean h(sample1) - mean h(sample2)|`` over the bank, with per-member table.

    ``paired`` treats the rows as coupled draws and takes standard errors of
    the differences.
    """
    if level not in (LIP1, LIP2):
        raise ValueError(f"unknown class {level!r}")
    if level == LIP2 and bank.level != LIP2:
        raise ValueError(f"bank {bank.name!r} is not certified for the doubly Lipschitz class")
    a = np.atleast_2d(np.asarray(sample1, dtype=float))
    b = np.atleast_2d(np.asarray(sample2, dtype=float))
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("empty sample")
    if paired and a.shape != b.shape:
        raise ValueError("paired samples must have the same shape")
    rows = []
    for h in bank:
        ha, hb = h.value(a), h.value(b)
        if paired:
            diff = ha - hb
            gap, se = diff.mean(), diff.std(ddof=1) / math.sqrt(diff.size) if diff.size > 1 else 0.0
        else:
            gap = ha.mean() - hb.mean()
            va = ha.var(ddof=1) / ha.size if ha.size > 1 else 0.0
            vb = hb.var(ddof=1) / hb.size if hb.size > 1 else 0.0
            se = math.sqrt(va + vb)
        rows.append(BankGap(h.name, float(abs(gap)), float(se)))
    best = max(rows, key=lambda r: r.gap)
    return best.gap, rows

