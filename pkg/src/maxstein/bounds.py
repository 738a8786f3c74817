"""Explicit constants in the distance bounds between max-stable laws.

The K and W constants are integrals of a radial profile against the
exponent measure of MS(alpha1, nu). For a discrete ``nu`` each coordinate
reduces to a sum over atoms of one-dimensional radial integrals, evaluated
in ``u = r**-alpha1`` with a split at ``r = 1 / v^j`` where ``|log y|`` kinks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measures import AngularMeasure, DomainError, pushforward_alpha, tv_distance
from .quadrature import DEFAULT_QUAD, QuadratureError, QuadratureSpec, radial_full

METRICS = ("K", "W")


@dataclass(frozen=True)
class BoundReport:
    name: str
    value: float
    quad_error: float
    alpha1: float
    alpha2: float
    nu: str

    def row(self):
        return [self.name, self.value, self.quad_error, self.alpha1, self.alpha2, self.nu]


def describe(nu: AngularMeasure) -> str:
    return f"d={nu.dimension};atoms={len(nu)};mass={nu.total_mass:.12g}"


def _check_alphas(alpha1, alpha2, need_above_one=False):
    if not 0 < alpha1 < alpha2:
        raise DomainError(f"need 0 < alpha1 < alpha2, got alpha1={alpha1}, alpha2={alpha2}")
    if need_above_one and alpha1 <= 1:
        raise DomainError(f"the Wasserstein constant needs alpha1 > 1, got alpha1={alpha1}")


def survival_profile(alpha1: float, alpha2: float, y):
    """``P(min(Z^b, Z) <= y)`` for ``Z ~ Frechet(alpha1)`` and ``b = alpha2 / alpha1``."""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        expo = np.minimum(y ** (-alpha1 * alpha1 / alpha2), y ** (-alpha1))
    return np.exp(-expo)


def k_profile(alpha1, alpha2):
    def phi(y):
        if y <= 0.0:
            return 0.0
        return abs(math.log(y)) * float(survival_profile(alpha1, alpha2, y))
    return phi


def w_profile(alpha1, alpha2):
    base = k_profile(alpha1, alpha2)

    def phi(y):
        return max(1.0, y) * base(y)
    return phi


def _exponent_integral(phi, alpha1: float, nu: AngularMeasure, quad: QuadratureSpec):
    """``sum_j int phi(y^j) dmu_{alpha1}(y)`` summed atom by atom."""
    marks = pushforward_alpha(nu, alpha1)
    total, err = 0.0, 0.0
    for w, v in zip(nu.weights, marks):
        if w == 0.0:
            continue
        for vj in v:
            if vj == 0.0:
                continue
            val, e = radial_full(lambda r, vj=vj: phi(r * vj), alpha1, quad, points=(1.0 / vj,))
            total += w * val
            err += w * e
    return total, err


def _report(name, base, phi, alpha1, alpha2, nu, quad):
    val, err = _exponent_integral(phi, alpha1, nu, quad)
    if err > max(quad.abs_tol, quad.rel_tol * abs(val)) * 10 * max(1, len(nu) * nu.dimension):
        raise QuadratureError(f"{name} constant", val, err)
    return BoundReport(name, base + val, err, alpha1, alpha2, describe(nu))


def ck_constant(alpha1: float, alpha2: float, nu: AngularMeasure, quad: QuadratureSpec = DEFAULT_QUAD) -> BoundReport:
    _check_alphas(alpha1, alpha2)
    return _report("CK", float(nu.dimension), k_profile(alpha1, alpha2), alpha1, alpha2, nu, quad)


def cw_constant(alpha1: float, alpha2: float, nu: AngularMeasure, quad: QuadratureSpec = DEFAULT_QUAD) -> BoundReport:
    _check_alphas(alpha1, alpha2, need_above_one=True)
    base = nu.dimension * math.gamma(1.0 - 1.0 / alpha1)
    return _report("CW", base, w_profile(alpha1, alpha2), alpha1, alpha2, nu, quad)


def _metric(metric):
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")


def alpha_bound(alpha1: float, alpha2: float, nu: AngularMeasure, metric: str = "K",
                quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``C (1/alpha1 + 1/alpha2) |alpha1 - alpha2|``; the constant uses the smaller alpha first."""
    _metric(metric)
    if metric == "W" and min(alpha1, alpha2) <= 1:
        raise DomainError("the Wasserstein bound needs both alphas above 1")
    if min(alpha1, alpha2) <= 0:
        raise DomainError("alphas must be positive")
    if alpha1 == alpha2:
        return 0.0
    lo, hi = sorted((alpha1, alpha2))
    const = ck_constant(lo, hi, nu, quad) if metric == "K" else cw_constant(lo, hi, nu, quad)
    return const.value * (1.0 / lo + 1.0 / hi) * (hi - lo)


def nu_bound(alpha: float, nu1: AngularMeasure, nu2: AngularMeasure, metric: str = "K") -> float:
    _metric(metric)
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    if metric == "W" and alpha <= 1:
        raise DomainError(f"the Wasserstein bound needs alpha > 1, got {alpha}")
    tv = tv_distance(nu1, nu2)
    scale = nu1.dimension if metric == "K" else nu1.dimension * math.gamma(1.0 - 1.0 / alpha)
    return scale * tv


def combined_bound(alpha1: float, alpha2: float, nu1: AngularMeasure, nu2: AngularMeasure,
                   metric: str = "K", quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Triangulate MS(alpha1, nu1) -> MS(alpha2, nu1) -> MS(alpha2, nu2)."""
    return alpha_bound(alpha1, alpha2, nu1, metric, quad) + nu_bound(alpha2, nu1, nu2, metric)
