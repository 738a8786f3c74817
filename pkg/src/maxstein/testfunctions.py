"""Test functions with value and gradient access, and certified banks of them.

Lipschitz constants are taken with respect to the l1 norm on the orthant,
i.e. a function is 1-Lipschitz when every partial derivative is bounded by
one. The default bank is made of bounded smooth functions whose partials are
themselves 1-Lipschitz, so it serves both as a Lip_1 and a Lip_1^[2] bank.

Every smooth bank member also carries an integer ``code`` and a parameter
vector, which is how the compiled generator kernel recognises it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

CLIP_COORD, CLIP_MEAN, CAPPED_SOFTMIN, SMOOTH_BOX = range(4)
N_PARAMS = 3

LIP1 = "lip1"
LIP2 = "lip2"


class CertificationError(ValueError):
    pass


class TestFunction:
    """Base class. ``value`` maps ``(..., d)`` to ``(...)``; ``gradient`` keeps the shape."""

    __test__ = False  # keep pytest from collecting this as a test class
    name = "h"
    smooth = True
    code = -1
    params = ()

    def value(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError

    def ray_breaks(self, x, v):
        """Radii ``r`` where ``r -> h(x (+) r v)`` may fail to be smooth, beyond the points ``r = x^j / v^j``."""
        return []

    def __call__(self, x):
        return self.value(x)

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


@dataclass(repr=False)
class ClipCoordinate(TestFunction):
    """Smooth version of ``min(x^j, c)``."""

    j: int
    c: float
    tau: float = 0.25

    def __post_init__(self):
        self.name = f"clip{self.j + 1}_c{self.c:g}"
        self.code = CLIP_COORD
        self.params = (float(self.j), self.c, self.tau)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return self.c - self.tau * np.logaddexp(0.0, (self.c - x[..., self.j]) / self.tau)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        g = np.zeros_like(x)
        g[..., self.j] = special.expit((self.c - x[..., self.j]) / self.tau)
        return g


@dataclass(repr=False)
class ClipMean(TestFunction):
    """Smooth version of ``min(mean_j x^j, c)``."""

    c: float
    tau: float = 0.25

    def __post_init__(self):
        self.name = f"clipmean_c{self.c:g}"
        self.code = CLIP_MEAN
        self.params = (self.c, self.tau, 0.0)

    def value(self, x):
        m = np.asarray(x, dtype=float).mean(axis=-1)
        return self.c - self.tau * np.logaddexp(0.0, (self.c - m) / self.tau)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        s = special.expit((self.c - x.mean(axis=-1)) / self.tau) / x.shape[-1]
        return np.broadcast_to(s[..., None], x.shape).copy()


@dataclass(repr=False)
class CappedSoftmin(TestFunction):
    """``-tau * log(sum_j exp(-x^j/tau) + exp(-c/tau))``, a smooth ``min(x^1, ..., x^d, c)``."""

    c: float
    tau: float

    def __post_init__(self):
        self.name = f"softmin_t{self.tau:g}"
        self.code = CAPPED_SOFTMIN
        self.params = (self.c, self.tau, 0.0)

    def _logits(self, x):
        x = np.asarray(x, dtype=float)
        cap = np.full(x.shape[:-1] + (1,), self.c)
        return -np.concatenate([x, cap], axis=-1) / self.tau

    def value(self, x):
        return -self.tau * special.logsumexp(self._logits(x), axis=-1)

    def gradient(self, x):
        return special.softmax(self._logits(x), axis=-1)[..., :-1]


@dataclass(repr=False)
class SmoothBox(TestFunction):
    """``s * prod_j sigmoid((c - x^j)/s)``, a scaled smooth indicator of ``[0, c]^d``."""

    c: float
    s: float

    def __post_init__(self):
        self.name = f"box_c{self.c:g}"
        self.code = SMOOTH_BOX
        self.params = (self.c, self.s, 0.0)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return self.s * np.prod(special.expit((self.c - x) / self.s), axis=-1)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        sig = special.expit((self.c - x) / self.s)
        return -np.prod(sig, axis=-1)[..., None] * (1.0 - sig)


@dataclass(repr=False)
class BoxIndicator(TestFunction):
    """``1{x <= z}`` componentwise. The gradient is the almost-everywhere zero one."""

    z: np.ndarray

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        self.name = "indicator"
        self.smooth = False

    def value(self, x):
        return np.all(np.asarray(x, dtype=float) <= self.z, axis=-1).astype(float)

    def gradient(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def ray_breaks(self, x, v):
        v = np.asarray(v, dtype=float)
        pos = v > 0
        return list(self.z[pos] / v[pos])


@dataclass(repr=False)
class Constant(TestFunction):
    c: float = 1.0

    def __post_init__(self):
        self.name = f"const_{self.c:g}"

    def value(self, x):
        return np.full(np.shape(x)[:-1], float(self.c))

    def gradient(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


class CallableFunction(TestFunction):
    """Wrap plain callables; ``grad`` and ``breaks`` are optional."""

    def __init__(self, fn, grad=None, breaks=None, name="callable", smooth=True):
        self._fn, self._grad, self._breaks = fn, grad, breaks
        self.name = name
        self.smooth = smooth

    def value(self, x):
        return self._fn(np.asarray(x, dtype=float))

    def gradient(self, x):
        if self._grad is None:
            raise NotImplementedError(f"{self.name} has no gradient")
        return self._grad(np.asarray(x, dtype=float))

    def ray_breaks(self, x, v):
        return [] if self._breaks is None else list(self._breaks(x, v))


# certification -----------------------------------------------------------------

def _pairs(d, rng, n):
    x = np.exp(rng.uniform(np.log(1e-2), np.log(1e2), size=(n, d)))
    near = x * np.exp(rng.normal(scale=0.05, size=(n, d)))
    far = np.exp(rng.uniform(np.log(1e-2), np.log(1e2), size=(n, d)))
    y = np.where(rng.random((n, 1)) < 0.7, near, far)
    return x, y


def certify(h: TestFunction, d: int, level: str = LIP2, n_pairs: int = 4000, seed: int = 0,
            slack: float = 1e-6) -> float:
    """Check the Lipschitz class of ``h`` on random pairs; returns the worst observed ratio.

    Also checks the analytic gradient against central differences.
    """
    rng = np.random.default_rng(seed)
    x, y = _pairs(d, rng, n_pairs)
    dist = np.abs(x - y).sum(axis=1)
    worst = np.max(np.abs(h.value(x) - h.value(y)) / dist)
    if level == LIP2:
        gx, gy = h.gradient(x), h.gradient(y)
        worst = max(worst, np.max(np.abs(gx - gy) / dist[:, None]))
    if worst > 1.0 + slack:
        raise CertificationError(f"{h.name}: observed Lipschitz ratio {worst:.6g} > 1")
    eps = 1e-6
    g = h.gradient(x[:200])
    for j in range(d):
        e = np.zeros(d)
        e[j] = eps
        fd = (h.value(x[:200] + e) - h.value(x[:200] - e)) / (2 * eps)
        if np.max(np.abs(fd - g[:, j])) > 1e-5:
            raise CertificationError(f"{h.name}: gradient disagrees with finite differences")
    return float(worst)


@dataclass
class TestFunctionBank:
    """A named finite family of test functions, certified on construction."""

    __test__ = False
    name: str
    members: list
    dimension: int
    level: str = LIP2
    ratios: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for h in self.members:
            self.ratios[h.name] = certify(h, self.dimension, self.level)

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    def names(self):
        return [h.name for h in self.members]

    def get(self, name: str) -> TestFunction:
        for h in self.members:
            if h.name == name:
                return h
        raise KeyError(f"bank {self.name!r} has no member {name!r}; members: {', '.join(self.names())}")

    def codes(self):
        """``(codes, params)`` arrays for the compiled kernels."""
        codes = np.array([h.code for h in self.members], dtype=np.int64)
        if np.any(codes < 0):
            raise ValueError("bank contains members without a kernel code")
        params = np.zeros((len(self.members), N_PARAMS))
        for i, h in enumerate(self.members):
            params[i, :len(h.params)] = h.params
        return codes, params


def smooth_members(d: int) -> list:
    # smoothing scales grow with the clip level so every transition has width ~1/4 in log x
    levels = (0.5, 1.0, 2.0, 4.0)
    members = [ClipCoordinate(0, c, max(0.25, c / 4)) for c in levels]
    members += [ClipMean(c, max(0.25, c / 4)) for c in levels]
    members.append(ClipCoordinate(d - 1, 1.0) if d > 1 else ClipCoordinate(0, 8.0, 2.0))
    members += [CappedSoftmin(2.0, tau) for tau in (0.5, 1.0)]
    members += [SmoothBox(c, c / 4) for c in (0.5, 1.0, 2.0)]
    return members


_BANKS: dict = {}


def smooth_bank(d: int) -> TestFunctionBank:
    """The default 14-member bank in dimension ``d`` (cached)."""
    if d not in _BANKS:
        _BANKS[d] = TestFunctionBank("smooth", smooth_members(d), d, LIP2)
    return _BANKS[d]


def get_bank(name: str, d: int) -> TestFunctionBank:
    if name == "smooth":
        return smooth_bank(d)
    raise KeyError(f"unknown bank {name!r} (available: smooth)")
