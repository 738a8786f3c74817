"""Stein solutions for max-stable laws.

For a box indicator ``h_z = 1_[0,z]`` the solution is explicit. With
``F = F_Z(z)`` and ``M = alpha (max_j log(x^j/z^j))_+``,

    g_z(x) = M F - F int_0^{e^{-M}} (F^{-u} - 1) / u du,

after the change of variables ``u = e^{-t}``. Its gradient, jump part and the
Stein residual are closed forms as well. For smooth ``h`` the solution
``g_h = -int_0^inf (P_t h - E h(Z)) dt`` is computed with a frozen sample of
``Z`` (common random numbers across time nodes) and a composite
Gauss-Legendre rule on the time axis ``u = e^{-t}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .measures import DomainError, MaxStableLaw, cdf
from .quadrature import DEFAULT_QUAD, QuadratureError, QuadratureSpec, adaptive, gauss_legendre
from .sampling import Estimate, RngStream, sample_exact
from .semigroup import MINUS
from .testfunctions import TestFunction

TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class IndicatorSolution:
    law: MaxStableLaw
    z: np.ndarray
    quad: QuadratureSpec = field(default=DEFAULT_QUAD)

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        if z.shape != (self.law.dimension,) or np.any(z <= 0):
            raise DomainError("z must be a strictly positive d-vector")
        object.__setattr__(self, "z", z)
        f = cdf(self.law, z)
        if not 0.0 < f < 1.0:
            raise DomainError(f"F(z) = {f} must lie strictly inside (0, 1)")

    @property
    def alpha(self) -> float:
        return self.law.alpha

    @property
    def F(self) -> float:
        return float(cdf(self.law, self.z))

    def ratios(self, x):
        with np.errstate(divide="ignore"):
            return np.asarray(x, dtype=float) / self.z

    def entry_time(self, x) -> np.ndarray:
        with np.errstate(divide="ignore"):
            m = np.max(np.log(self.ratios(x)), axis=-1)
        return self.alpha * np.maximum(m, 0.0)


def _tail_integral(F: float, top: float, quad: QuadratureSpec):
    """``int_0^top (F^{-u} - 1)/u du`` by adaptive quadrature."""
    lam = -math.log(F)

    def f(u):
        return math.expm1(lam * u) / u if u > 0 else lam

    return adaptive(f, 0.0, top, quad)


def tail_integral_exact(F: float, top):
    """Closed form ``Ei(lam top) - log(lam top) - euler_gamma`` of the same integral."""
    lam = -math.log(F)
    a = lam * np.asarray(top, dtype=float)
    return special.expi(a) - np.log(a) - np.euler_gamma


def gz_value(sol: IndicatorSolution, x) -> np.ndarray | float:
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("g_z is defined on the closed positive orthant")
    F = sol.F
    m = np.atleast_1d(sol.entry_time(x))
    out = np.empty(m.shape)
    for i, mi in enumerate(m.ravel()):
        tail, _ = _tail_integral(F, math.exp(-mi), sol.quad)
        out.flat[i] = mi * F - F * tail
    return float(out[0]) if x.ndim == 1 else out


def _argmax_checked(sol: IndicatorSolution, x: np.ndarray):
    """Index of the largest ``x^j/z^j`` and that ratio; rejects ties and box boundary points."""
    r = sol.ratios(x)
    top = np.max(r, axis=-1)
    j0 = np.argmax(r, axis=-1)
    n_top = np.sum(r >= top[..., None] * (1 - TIE_TOL), axis=-1)
    outside = top > 1
    if np.any(outside & (n_top > 1)):
        raise DomainError("the largest ratio x^j/z^j is attained twice: g_z is not differentiable there")
    if np.any(np.abs(top - 1) <= TIE_TOL):
        raise DomainError("x lies on the boundary of the box [0, z]")
    return j0, top, outside


def gz_gradient(sol: IndicatorSolution, x) -> np.ndarray:
    """``d_{j0} g_z = (alpha/x^{j0}) F^{1 - (z^{j0}/x^{j0})^alpha}`` outside the box, 0 inside."""
    x = np.asarray(x, dtype=float)
    j0, top, outside = _argmax_checked(sol, x)
    g = np.zeros_like(x)
    xj = np.take_along_axis(x, np.asarray(j0)[..., None], axis=-1)[..., 0]
    with np.errstate(over="ignore"):  # the discarded inside branch may overflow
        val = np.where(outside, sol.alpha / xj * sol.F ** (1.0 - top ** (-sol.alpha)), 0.0)
    np.put_along_axis(g, np.asarray(j0)[..., None], np.asarray(val)[..., None], axis=-1)
    return g


def gz_jump(sol: IndicatorSolution, x) -> np.ndarray | float:
    """``D g_z(x)``: ``F^{1 - rho^-alpha} - F`` outside the box (``rho = max_j x^j/z^j``), ``1 - F`` inside."""
    x = np.asarray(x, dtype=float)
    _, top, outside = _argmax_checked(sol, x)
    F = sol.F
    with np.errstate(divide="ignore", over="ignore"):
        out = np.where(outside, F ** (1.0 - top ** (-sol.alpha)) - F, 1.0 - F)
    return float(out) if np.ndim(out) == 0 else out


def stein_residual_indicator(sol: IndicatorSolution, x, drift_sign: float = MINUS):
    """``L g_z(x) - (1_[0,z](x) - F)`` from the closed forms.

    ``drift_sign=+1`` evaluates the generator with the opposite drift sign.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("x must be strictly positive")
    drift = drift_sign / sol.alpha * np.sum(x * gz_gradient(sol, x), axis=-1)
    inside = np.all(x <= sol.z, axis=-1).astype(float)
    out = drift + gz_jump(sol, x) - (inside - sol.F)
    return float(out) if np.ndim(out) == 0 else out


def gz_ray_breaks(sol: IndicatorSolution):
    """Break points of ``r -> g_z(x (+) r v)``: where a coordinate crosses ``z^j`` times a competing ratio."""
    def breaks(x, v):
        x = np.asarray(x, dtype=float)
        pos = v > 0
        scales = np.concatenate([[1.0], sol.ratios(x)])
        return [float(s * zj / vj) for s in scales for zj, vj in zip(sol.z[pos], v[pos])]
    return breaks


def as_test_function(sol: IndicatorSolution) -> TestFunction:
    from .testfunctions import CallableFunction

    return CallableFunction(lambda x: gz_value(sol, x), lambda x: gz_gradient(sol, x), gz_ray_breaks(sol),
                            name="g_z", smooth=False)


# smooth test functions ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SmoothSolution:
    law: MaxStableLaw
    h: TestFunction
    nodes: int = 16
    time_tol: float = 1e-6
    inner_reps: int = 100_000
    max_nodes: int = 256

    def __post_init__(self):
        self.law.require_alpha_above_one("the smooth Stein solution")


def _time_breaks(alpha, x, z):
    # coordinate j switches from Z to x at u = a/(1+a), a = (Z^j/x^j)^alpha
    with np.errstate(divide="ignore"):
        a = (z / x) ** alpha
        u = np.where(np.isinf(a), 1.0, a / (1.0 + a))
    return np.sort(u, axis=-1)


def _integrate_time(fn, alpha, x, z, n):
    """Composite n-point rule of ``fn(u, z) -> (reps, k, n, ...)`` over the smooth pieces of (0, 1)."""
    reps = z.shape[0]
    edges = np.concatenate([np.zeros((reps, 1)), _time_breaks(alpha, x, z), np.ones((reps, 1))], axis=1)
    lo, width = edges[:, :-1], np.diff(edges, axis=1)
    gx, gw = gauss_legendre(n)
    u = lo[:, :, None] + width[:, :, None] * gx
    vals = fn(u)
    w = width[:, :, None] * gw
    return np.einsum("rkn,rkn...->r...", w, vals)


def _value_integrand(sol: SmoothSolution, x, z):
    a = sol.law.alpha
    hz = sol.h.value(z)

    def fn(u):
        y = np.maximum(u[..., None] ** (1 / a) * x, (1 - u[..., None]) ** (1 / a) * z[:, None, None, :])
        return (sol.h.value(y) - hz[:, None, None]) / u
    return fn


def _gradient_integrand(sol: SmoothSolution, x, z):
    a = sol.law.alpha

    def fn(u):
        s = u[..., None] ** (1 / a)
        y = np.maximum(s * x, (1 - u[..., None]) ** (1 / a) * z[:, None, None, :])
        active = s * x >= y
        return sol.h.gradient(y) * active * s / u[..., None]
    return fn


def _converged(sol, make, x, z):
    n = sol.nodes
    prev = _integrate_time(make(sol, x, z), sol.law.alpha, x, z, n)
    while True:
        n *= 2
        cur = _integrate_time(make(sol, x, z), sol.law.alpha, x, z, n)
        err = float(np.max(np.abs(np.mean(cur - prev, axis=0))))
        if err <= sol.time_tol:
            return cur
        if n >= sol.max_nodes:
            raise QuadratureError("time quadrature of the Stein solution did not settle", float(np.mean(cur)), err)
        prev = cur


def frozen_sample(sol: SmoothSolution, rng: RngStream) -> np.ndarray:
    return sample_exact(sol.law, rng, sol.inner_reps)


def gh_replicates(sol: SmoothSolution, x, z) -> np.ndarray:
    """Per-replicate values whose mean is ``g_h(x)``, for a frozen sample ``z``."""
    x = np.asarray(x, dtype=float)
    out = []
    for s in range(0, z.shape[0], 4096):
        out.append(-_converged(sol, _value_integrand, x, z[s:s + 4096]))
    return np.concatenate(out)


def gh_value(sol: SmoothSolution, x, rng: RngStream, z=None) -> Estimate:
    z = frozen_sample(sol, rng) if z is None else z
    vals = gh_replicates(sol, x, z)
    return _estimate(vals)


def gh_gradient(sol: SmoothSolution, x, rng: RngStream, z=None):
    """Pathwise gradient ``-int_0^1 u^{1/alpha} E[d_j h(y_u) 1{x^j active}] du/u``; returns (values, SEs)."""
    x = np.asarray(x, dtype=float)
    z = frozen_sample(sol, rng) if z is None else z
    parts = [-_converged(sol, _gradient_integrand, x, z[s:s + 4096]) for s in range(0, z.shape[0], 4096)]
    vals = np.concatenate(parts)
    return vals.mean(axis=0), vals.std(axis=0, ddof=1) / math.sqrt(vals.shape[0])


def gh_gradient_fd(sol: SmoothSolution, x, z, step: float = 1e-4):
    """Central differences of ``g_h`` on a shared frozen sample; returns (values, SEs)."""
    x = np.asarray(x, dtype=float)
    d = x.size
    cols = []
    for j in range(d):
        e = np.zeros(d)
        e[j] = min(step, 0.5 * x[j]) if x[j] > 0 else step
        lo = x - e if x[j] > 0 else x
        width = (x + e)[j] - lo[j]
        cols.append((gh_replicates(sol, x + e, z) - gh_replicates(sol, lo, z)) / width)
    vals = np.stack(cols, axis=1)
    return vals.mean(axis=0), vals.std(axis=0, ddof=1) / math.sqrt(vals.shape[0])


def _estimate(vals) -> Estimate:
    vals = np.asarray(vals, dtype=float)
    se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
    return Estimate(float(vals.mean()), se)


def gh_bound(alpha: float, x) -> np.ndarray:
    """Envelope ``min(alpha, (x^j)^alpha)`` for ``|d_j g_h|``."""
    x = np.asarray(x, dtype=float)
    return np.minimum(alpha, x ** alpha)


# envelope constants ------------------------------------------------------------

@dataclass(frozen=True)
class EnvelopeConstants:
    alpha: float
    d: int
    c2: float
    c2_error: float

    def c1(self, t):
        return c1_value(self.alpha, self.d, t)


def c1_value(alpha: float, d: int, t):
    t = np.asarray(t, dtype=float)
    with np.errstate(over="ignore"):
        return (d - 1) * np.exp(-t / alpha) + alpha * np.expm1(t) ** (-1.0 / alpha)


def c2_closed_form(alpha: float, d: int) -> float:
    return (d - 1) * alpha + alpha * math.pi / math.sin(math.pi / alpha)


def envelope_constants(alpha: float, d: int, quad: QuadratureSpec = QuadratureSpec(1e-12, 1e-10, 400)):
    """``C_1(t)`` and ``C_2 = int_0^inf C_1(t) dt``, the latter by quadrature."""
    if not alpha > 1:
        raise DomainError(f"the envelope constants need alpha > 1, got {alpha}")
    if d < 1:
        raise ValueError("dimension must be positive")
    # t = w^p with p = alpha/(alpha-1) removes the t^{-1/alpha} singularity at 0
    p = alpha / (alpha - 1.0)

    def f(w):
        if w == 0.0:
            return p * alpha  # limit of the second term; the first vanishes since p > 1
        t = w ** p
        return float(c1_value(alpha, d, t)) * p * w ** (p - 1.0)

    a, ea = adaptive(f, 0.0, 1.0, quad)
    b, eb = adaptive(f, 1.0, np.inf, quad)
    return EnvelopeConstants(alpha, d, a + b, ea + eb)

