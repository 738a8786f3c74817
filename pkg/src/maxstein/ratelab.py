"""Convergence-rate experiments for truncations of the LePage series.

All metrics are computed on one set of simulated configurations shared
across the whole n-grid. Only the first point carrying each atom can
contribute to a partial maximum, so configurations are simulated through
their first-occurrence records, which costs nothing extra for large
``big_n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lepage import maxima_from_records, sample_records
from .measures import DomainError, MaxStableLaw, cdf
from .report import ExperimentReport
from .sampling import RngStream
from .testfunctions import smooth_bank

RATE_METRICS = ("coupledW", "d2bank", "kolmogorov")
NOISE_SE = 3.0
MIN_FIT_POINTS = 4
PROXY_FACTOR = 16
KS_GRID_NODES = 40


class FitError(RuntimeError):
    """Too few estimates above the noise floor to fit a slope."""


def geometric_grid(lo: int, hi: int, factor: int = 2):
    out, n = [], lo
    while n <= hi:
        out.append(n)
        n *= factor
    return out


@dataclass(frozen=True)
class RateExperiment:
    law: MaxStableLaw
    ns: tuple
    big_n: int
    reps: int
    metric: str = "coupledW"
    seed: int = 0

    def __post_init__(self):
        ns = tuple(int(n) for n in self.ns)
        object.__setattr__(self, "ns", ns)
        if self.metric not in RATE_METRICS:
            raise ValueError(f"metric must be one of {RATE_METRICS}, got {self.metric!r}")
        if not ns or any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("the n-grid must be nonempty and strictly increasing")
        if ns[0] < 2:
            raise ValueError("the n-grid must start at n >= 2")
        if self.big_n < PROXY_FACTOR * ns[-1]:
            raise ValueError(f"big_n must be at least {PROXY_FACTOR} times the largest n")
        if self.reps < 2:
            raise ValueError("need at least two replicates")
        if self.metric in ("coupledW", "d2bank"):
            self.law.require_alpha_above_one(f"the {self.metric} metric")


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    residual: float
    table: list = field(default_factory=list)


def theoretical_rate(metric: str, alpha: float, n) -> float:
    if metric not in RATE_METRICS:
        raise ValueError(f"metric must be one of {RATE_METRICS}, got {metric!r}")
    if n < 2:
        raise DomainError("rates are stated for n >= 2")
    if metric == "coupledW":
        return 1.0 / n
    if metric == "d2bank":
        return n ** -(1.0 + 1.0 / alpha)
    return (math.log(n) / n) ** (2.0 / 3.0)


def fit_slope(ns, estimates, ses) -> SlopeFit:
    """Weighted least squares of ``log estimate`` on ``log n``.

    Weights are inverse squared relative standard errors; points below
    ``NOISE_SE`` standard errors are dropped.
    """
    ns, est, se = (np.asarray(a, dtype=float) for a in (ns, estimates, ses))
    keep = (est > 0) & (est > NOISE_SE * se)
    table = [(int(n), float(e), float(s), bool(k)) for n, e, s, k in zip(ns, est, se, keep)]
    if keep.sum() < MIN_FIT_POINTS:
        raise FitError(f"only {int(keep.sum())} of {len(ns)} grid points lie above {NOISE_SE:g} standard errors; "
                       f"need {MIN_FIT_POINTS} for a slope fit")
    x, y = np.log(ns[keep]), np.log(est[keep])
    rel = np.maximum(se[keep] / est[keep], 1e-12)
    w = 1.0 / rel**2
    design = np.stack([x, np.ones_like(x)], axis=1)
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)
    resid = y - design @ coef
    rms = float(np.sqrt(np.sum(w * resid**2) / np.sum(w)))
    return SlopeFit(float(coef[0]), float(coef[1]), rms, table)


def _ks_axis(alpha, nodes=KS_GRID_NODES):
    # marginal CDF exp(-s) spans roughly [e^-20, e^-0.005] over this range
    s = np.geomspace(20.0, 5e-3, nodes)
    return s ** (-1.0 / alpha)


def grid_cdf_counts(x: np.ndarray, axis: np.ndarray) -> np.ndarray:
    """Number of rows of ``x`` below each node of the product grid ``axis^d``."""
    d = x.shape[1]
    bins = np.searchsorted(axis, x, side="left")  # node index of the first node >= x^j
    counts = np.zeros((axis.size + 1,) * d, dtype=np.int64)
    np.add.at(counts, tuple(bins.T), 1)
    for j in range(d):
        counts = np.cumsum(counts, axis=j)
    return counts[(slice(0, axis.size),) * d]


def _coupled_kolmogorov(law, m_n, m_full, axis):
    # m_n <= m_full componentwise, so F_n - F_full at z is the fraction of
    # replicates with m_n <= z but not m_full <= z
    reps = m_n.shape[0]
    gap = (grid_cdf_counts(m_n, axis) - grid_cdf_counts(m_full, axis)) / reps
    k = np.unravel_index(int(np.argmax(gap)), gap.shape)
    p = float(gap[k])
    return p, math.sqrt(max(p * (1 - p), 0.0) / reps)


def run_rate_experiment(e: RateExperiment, threads=None):
    """Estimates and standard errors on the n-grid, plus a slope fit (or the :class:`FitError`)."""
    law = e.law
    first, radius = sample_records(law, RngStream(e.seed, 0), e.reps, e.big_n, threads=threads)
    full = maxima_from_records(law, first, radius, e.big_n)
    rows = []
    if e.metric == "d2bank":
        bank = smooth_bank(law.dimension)
        h_full = [h.value(full) for h in bank]
    if e.metric == "kolmogorov":
        axis = _ks_axis(law.alpha)
    for n in e.ns:
        m = maxima_from_records(law, first, radius, n)
        if e.metric == "coupledW":
            err = np.abs(full - m).sum(axis=1)
            est, se = float(err.mean()), float(err.std(ddof=1) / math.sqrt(e.reps))
        elif e.metric == "d2bank":
            best = (0.0, 0.0)
            for h, hf in zip(bank, h_full):
                diff = h.value(m) - hf
                g = abs(float(diff.mean()))
                if g > best[0]:
                    best = (g, float(diff.std(ddof=1) / math.sqrt(e.reps)))
            est, se = best
        else:
            est, se = _coupled_kolmogorov(law, m, full, axis)
        rows.append((n, est, se, theoretical_rate(e.metric, law.alpha, n)))
    try:
        fit = fit_slope([r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows])
    except FitError as exc:
        fit = exc
    return rows, fit


def rate_report(e: RateExperiment, rows, fit, extra=None) -> ExperimentReport:
    meta = {"experiment": "lepage-rate", "metric": e.metric, "alpha": e.law.alpha, "d": e.law.dimension,
            "ns": list(e.ns), "big_n": e.big_n, "reps": e.reps, "seed": e.seed}
    if e.metric == "d2bank":
        meta["note"] = "estimates are bank lower bounds on the d2 distance"
    if isinstance(fit, SlopeFit):
        meta.update(slope=fit.slope, intercept=fit.intercept, fit_residual=fit.residual)
    elif fit is not None:
        meta["fit_error"] = str(fit)
    meta.update(extra or {})
    rep = ExperimentReport(["n", "estimate", "std_error", "theoretical"], meta=meta)
    for r in rows:
        rep.add(*r)
    return rep
