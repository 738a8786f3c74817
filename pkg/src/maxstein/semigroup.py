"""The max-stable Ornstein-Uhlenbeck type semigroup and its generator.

    P_t h(x) = E h(e^{-t/alpha} x (+) (1 - e^{-t})^{1/alpha} Z),   Z ~ MS(alpha, nu)

is evaluated three ways: plain Monte Carlo, the one-jump (chaos) expansion
driven by a Poisson number of exceedances of ``x``, and in closed form for
box indicators. The generator is

    L h(x) = -(1/alpha) <x, grad h(x)> + D h(x),
    D h(x) = sum_k w_k int_0^inf [h(x (+) r v_k) - h(x)] alpha r^{-alpha-1} dr,

with ``v_k = u_k^{1/alpha}``. ``drift_sign`` exists so the opposite sign can
be evaluated on purpose, as a witness that it breaks the Stein equation.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .measures import DomainError, MaxStableLaw, cdf, exponent_complement
from .quadrature import DEFAULT_QUAD, QuadratureSpec, gauss_legendre, gauss_legendre_table, radial_tail
from .sampling import Estimate, RngStream, exact_from, map_blocks, uniforms
from .testfunctions import ClipCoordinate, TestFunction, TestFunctionBank

MINUS, PLUS = -1.0, 1.0
BATCH_NODES = 12
STRETCH = 3.0
DENSITY = 6.0


@dataclass(frozen=True, eq=False)
class SemigroupQuery:
    law: MaxStableLaw
    t: float
    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.shape != (self.law.dimension,):
            raise ValueError(f"x must have {self.law.dimension} coordinates")
        if not self.t >= 0 or np.any(x < 0):
            raise ValueError("need t >= 0 and x >= 0")
        object.__setattr__(self, "x", x)

    @property
    def gamma(self) -> float:
        return math.expm1(self.t)

    def scales(self):
        """``(e^{-t/alpha}, (1 - e^{-t})^{1/alpha})``."""
        a = self.law.alpha
        return math.exp(-self.t / a), (-math.expm1(-self.t)) ** (1.0 / a)


@dataclass(frozen=True, eq=False)
class GeneratorQuery:
    law: MaxStableLaw
    x: np.ndarray
    quad: QuadratureSpec = field(default=DEFAULT_QUAD)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.shape != (self.law.dimension,):
            raise ValueError(f"x must have {self.law.dimension} coordinates")
        if np.any(x <= 0):
            raise DomainError("the generator is evaluated at strictly positive points only")
        object.__setattr__(self, "x", x)


def semigroup_mc(q: SemigroupQuery, h: TestFunction, rng: RngStream, reps: int, threads=None) -> Estimate:
    a, b = q.scales()
    xs = a * q.x

    def block(stream, m):
        z = exact_from(stream.generator(), q.law, m)
        return moments(h.value(np.maximum(xs, b * z)))

    return combine(map_blocks(block, rng, reps, threads=threads))


def moments(values):
    values = np.asarray(values, dtype=float).ravel()
    # shift by the first value so a constant block gives exactly zero spread
    dev = values - values[0]
    m = dev.mean()
    return values.size, float(values[0] + m), float(np.square(dev - m).sum())


def combine(parts) -> Estimate:
    """Merge blockwise ``(count, mean, centred sum of squares)`` in block order."""
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in parts:
        tot = n + nb
        delta = mb - mean
        mean += delta * nb / tot
        m2 += m2b + delta * delta * n * nb / tot
        n = tot
    se = math.sqrt(m2 / (n - 1) / n) if n > 1 else 0.0
    return Estimate(float(mean), se)


def semigroup_indicator(q: SemigroupQuery, z) -> float:
    """``P_t 1_[0,z](x) = F(z)^{1 - e^{-t}} 1{t >= M}``, ``M = alpha (max_j log(x^j/z^j))_+``."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise DomainError("z must be strictly positive")
    if q.t < indicator_entry_time(q.law.alpha, q.x, z):
        return 0.0
    return float(cdf(q.law, z) ** (-math.expm1(-q.t)))


def indicator_entry_time(alpha: float, x, z) -> float:
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        m = float(np.max(np.log(x / z)))
    return alpha * max(m, 0.0)


def chaos_from(gen, law: MaxStableLaw, x: np.ndarray, gamma: float, m: int):
    """Draw ``x (+) max_i Y_i`` for ``m`` replicates, with the Poisson counts.

    Points from atom ``k`` above its threshold are Pareto in radius, so only
    their count and the radius of the largest one matter.
    """
    marks = law.marks()
    w = law.angular.weights
    with np.errstate(divide="ignore"):
        thr = np.min(np.where(marks > 0, x / np.where(marks > 0, marks, 1.0), np.inf), axis=1)
    mass = w * thr ** (-law.alpha)
    total = float(mass.sum())
    k_atoms = len(w)
    u = uniforms(gen, (m, 2 * k_atoms))
    n_total = stats.poisson.ppf(u[:, 0], gamma * total).astype(np.int64) if gamma > 0 else np.zeros(m, np.int64)
    left = n_total.copy()
    rest = total
    y = np.broadcast_to(x, (m, law.dimension)).copy()
    for k in range(k_atoms):
        if k < k_atoms - 1:
            p = min(mass[k] / rest, 1.0) if rest > 0 else 0.0
            nk = stats.binom.ppf(u[:, 1 + k], left, p).astype(np.int64)
            rest -= mass[k]
        else:
            nk = left
        left = left - nk
        has = nk > 0
        if np.any(has):
            frac = -np.expm1(np.log(u[has, k_atoms + k]) / nk[has])
            r = thr[k] * frac ** (-1.0 / law.alpha)
            y[has] = np.maximum(y[has], r[:, None] * marks[k])
    return y, n_total


def semigroup_chaos(q: SemigroupQuery, h: TestFunction, rng: RngStream, reps: int, threads=None,
                    return_counts: bool = False):
    if np.any(q.x <= 0):
        raise DomainError("the chaos expansion needs a strictly positive x")
    scale, _ = q.scales()
    gamma = q.gamma

    def block(stream, m):
        y, n = chaos_from(stream.generator(), q.law, q.x, gamma, m)
        return moments(h.value(scale * y)), moments(n)

    parts = map_blocks(block, rng, reps, threads=threads)
    est = combine([p[0] for p in parts])
    if return_counts:
        return est, combine([p[1] for p in parts])
    return est


# generator ---------------------------------------------------------------------

def atom_threshold(x: np.ndarray, v: np.ndarray) -> float:
    """``min_j x^j / v^j`` over coordinates with ``v^j > 0``: below it ``x (+) r v = x``."""
    pos = v > 0
    return float(np.min(x[pos] / v[pos]))


def jump_apply(q: GeneratorQuery, h: TestFunction) -> tuple[float, float]:
    """``D h(x)`` by adaptive radial quadrature per atom; returns ``(value, abserr)``."""
    x = q.x
    hx = float(h.value(x))
    total, err = 0.0, 0.0
    for wk, v in zip(q.law.angular.weights, q.law.marks()):
        if wk == 0:
            continue
        thr = atom_threshold(x, v)
        pos = v > 0
        kinks = list(x[pos] / v[pos]) + list(h.ray_breaks(x, v))

        def g(r, v=v):
            return float(h.value(np.maximum(x, r * v))) - hx

        val, e = radial_tail(g, thr, q.law.alpha, q.quad, points=kinks)
        total += wk * val
        err += wk * e
    return total, err


def drift_apply(law: MaxStableLaw, x, h: TestFunction, drift_sign: float = MINUS):
    x = np.asarray(x, dtype=float)
    return drift_sign / law.alpha * np.sum(x * h.gradient(x), axis=-1)


def generator_apply(q: GeneratorQuery, h: TestFunction, drift_sign: float = MINUS) -> float:
    jump, _ = jump_apply(q, h)
    return float(drift_apply(q.law, q.x, h, drift_sign)) + jump


def jump_bank(law: MaxStableLaw, x: np.ndarray, bank: TestFunctionBank, nodes: int = BATCH_NODES,
              stretch: float = STRETCH, density: float = DENSITY) -> np.ndarray:
    """``D h(x_i)`` for every bank member at every row of ``x``; shape ``(n, len(bank))``.

    Members that depend on a single coordinate go through the tabulated
    one-dimensional tail integral; the rest through fixed-order Gauss-Legendre
    on each smooth piece of each radial integral.
    """
    from . import _kernels

    x = np.ascontiguousarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("the generator is evaluated at strictly positive points only")
    out = np.empty((x.shape[0], len(bank)))
    single = [i for i, h in enumerate(bank) if isinstance(h, ClipCoordinate)]
    rest = [i for i in range(len(bank)) if i not in single]
    moments = law.angular.moments()
    for i in single:
        h = bank.members[i]
        out[:, i] = moments[h.j] * clip_tail(law.alpha, h.c, h.tau)(x[:, h.j])
    if rest:
        codes, params = bank.codes()
        gx, gw = gauss_legendre_table(nodes)
        out[:, rest] = _kernels.jump_bank(
            x, np.ascontiguousarray(law.marks()), np.ascontiguousarray(law.angular.weights), law.alpha,
            codes[rest], np.ascontiguousarray(params[rest]), gx, gw, float(stretch), int(nodes), float(density))
    return out


class _TailTable:
    """Cubic Hermite interpolant of ``s -> int_s^inf phi'(rho) rho^-alpha d rho`` in ``log s``.

    For ``phi(y) = c - tau softplus((c - y)/tau)`` this is the radial jump
    integral of a coordinate clip along any atom, up to the factor
    ``w_k u_k^j`` produced by the substitution ``rho = r v^j``.
    """

    LO, HI, CELLS = -8.0, 12.0, 4096

    def __init__(self, alpha, c, tau):
        self.alpha, self.c, self.tau = alpha, c, tau
        self.grid = np.linspace(self.LO, self.HI, self.CELLS + 1)
        gx, gw = gauss_legendre(10)
        step = self.grid[1] - self.grid[0]
        t = self.grid[:-1, None] + step * gx[None, :]
        cell = (self._slope(t) * gw).sum(axis=1) * step
        tail = np.concatenate([np.cumsum(cell[::-1])[::-1], [0.0]])
        self.values = tail
        self.derivs = -self._slope(self.grid)

    def _slope(self, t):
        # integrand in log s: phi'(e^t) e^{t(1 - alpha)}
        s = np.exp(t)
        return special.expit((self.c - s) / self.tau) * np.exp(t * (1.0 - self.alpha))

    def __call__(self, s):
        t = np.log(np.asarray(s, dtype=float))
        if np.any(t < self.LO):
            raise DomainError("coordinate below the tabulated range")
        t = np.minimum(t, self.HI)
        step = self.grid[1] - self.grid[0]
        i = np.minimum(((t - self.LO) / step).astype(np.int64), self.CELLS - 1)
        q = (t - self.grid[i]) / step
        y0, y1 = self.values[i], self.values[i + 1]
        m0, m1 = self.derivs[i] * step, self.derivs[i + 1] * step
        q2, q3 = q * q, q * q * q
        return ((2 * q3 - 3 * q2 + 1) * y0 + (q3 - 2 * q2 + q) * m0
                + (-2 * q3 + 3 * q2) * y1 + (q3 - q2) * m1)


@lru_cache(maxsize=64)
def clip_tail(alpha: float, c: float, tau: float) -> _TailTable:
    return _TailTable(alpha, c, tau)


def generator_bank(law: MaxStableLaw, x: np.ndarray, bank: TestFunctionBank, nodes: int = BATCH_NODES,
                   drift_sign: float = MINUS, **kw) -> np.ndarray:
    jump = jump_bank(law, x, bank, nodes, **kw)
    drift = np.stack([drift_apply(law, x, h, drift_sign) for h in bank], axis=1)
    return drift + jump


def jump_indicator(law: MaxStableLaw, x, z) -> float:
    """Closed form of ``D 1_[0,z](x)``: ``-mu([0,z]^c)`` inside the box, 0 outside."""
    x, z = np.asarray(x, dtype=float), np.asarray(z, dtype=float)
    return -exponent_complement(law, z) if np.all(x <= z) else 0.0
