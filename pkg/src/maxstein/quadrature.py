"""Quadrature helpers shared by the semigroup, stein and bounds modules.

Adaptive integration is delegated to QUADPACK (``scipy.integrate.quad``);
what lives here is the bookkeeping around it: tolerance specs, explicit
failure reporting, and the change of variables that turns a radial
integral against ``alpha * r**-(alpha + 1) dr`` on ``[b, inf)`` into a
Lebesgue integral over a bounded interval.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, value: float, abserr: float):
        super().__init__(f"{message} (value={value!r}, achieved abserr={abserr:.3e})")
        self.value = value
        self.abserr = abserr


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_QUAD = QuadratureSpec()


def adaptive(f, a: float, b: float, spec: QuadratureSpec = DEFAULT_QUAD, points=None):
    """Integrate ``f`` over ``[a, b]``; returns ``(value, abserr)``.

    Raises :class:`QuadratureError` when QUADPACK flags non-convergence and
    the reported error exceeds the tolerance implied by ``spec``.
    """
    if b == a:
        return 0.0, 0.0
    kwargs = dict(epsabs=spec.abs_tol, epsrel=spec.rel_tol, limit=spec.max_subdivisions, full_output=1)
    if points is not None:
        pts = [p for p in points if a < p < b]
        if pts:
            kwargs["points"] = sorted(pts)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(f, a, b, **kwargs)
    value, abserr = float(out[0]), float(out[1])
    if not (np.isfinite(value) and np.isfinite(abserr)):
        raise QuadratureError("non-finite quadrature result", value, abserr)
    # A 4-tuple means QUADPACK set ier > 0. It is often pessimistic (roundoff
    # detection), so only fail when the error estimate misses the request.
    if len(out) > 3 and abserr > 10 * max(spec.abs_tol, spec.rel_tol * abs(value)):
        raise QuadratureError(out[3].splitlines()[0], value, abserr)
    return value, abserr


def radial_tail(g, b: float, alpha: float, spec: QuadratureSpec = DEFAULT_QUAD, points=()):
    """``int_b^inf g(r) alpha r^-(alpha+1) dr`` via ``u = r**-alpha``.

    The Levy-type measure becomes ``du`` on ``(0, b**-alpha]``; any growth of
    ``g`` like ``r`` turns into an integrable ``u**(-1/alpha)`` endpoint
    singularity which QUADPACK's extrapolation handles.
    """
    if not b > 0:
        raise ValueError("radial_tail needs a positive lower limit")
    top = b ** (-alpha)
    upts = [p ** (-alpha) for p in points if p > b]

    def integrand(u):
        if u <= 0.0:
            return 0.0
        return g(u ** (-1.0 / alpha))

    return adaptive(integrand, 0.0, top, spec, points=upts)


@lru_cache(maxsize=32)
def gauss_legendre(n: int):
    """Nodes and weights on ``[0, 1]``."""
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


def radial_full(g, alpha: float, spec: QuadratureSpec = DEFAULT_QUAD, points=()):
    """``int_0^inf g(r) alpha r^-(alpha+1) dr`` via ``u = r**-alpha`` on ``(0, inf)``.

    ``points`` are radii where ``g`` is not smooth; the u-axis is split there.
    Beyond the last split (and beyond ``u = 1``) the integral runs in ``log u``,
    which keeps slowly decaying profiles near ``r = 0`` within QUADPACK's reach.
    """
    cuts = sorted({p ** (-alpha) for p in points if p > 0} | {1.0})

    def integrand(u):
        return 0.0 if u <= 0.0 else g(u ** (-1.0 / alpha))

    edges = [0.0] + cuts
    total, err = 0.0, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        v, e = adaptive(integrand, a, b, spec)
        total, err = total + v, err + e
    top = edges[-1]

    def log_integrand(s):
        if s > 700.0:
            return 0.0
        u = top * math.exp(s)
        return integrand(u) * u

    v, e = adaptive(log_integrand, 0.0, np.inf, spec)
    return total + v, err + e


@lru_cache(maxsize=8)
def gauss_legendre_table(n_max: int):
    """Row ``n`` holds the n-point rule on ``[0, 1]`` (zero padded); row 0 is empty."""
    x = np.zeros((n_max + 1, n_max))
    w = np.zeros((n_max + 1, n_max))
    for n in range(1, n_max + 1):
        x[n, :n], w[n, :n] = gauss_legendre(n)
    return x, w
