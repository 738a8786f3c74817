"""Angular measures, max-stable laws and their exponent-measure functionals.

Angular measures are finite and discrete, with atoms on the l1 unit simplex.
For such a measure the exponent measure of the complement of a box has the
closed form

    mu([0, z]^c) = sum_k w_k * max_j u_k^j * (z^j)^(-alpha),

which everything else in the package leans on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SIMPLEX_TOL = 1e-12
MOMENT_TOL = 1e-9
MERGE_TOL = 1e-12


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


@dataclass(frozen=True, eq=False)
class AngularMeasure:
    """Finite discrete measure on the positive l1 unit simplex.

    ``points`` has shape ``(K, d)``, ``weights`` shape ``(K,)``.
    Moment constraints are *not* enforced here (see :class:`MaxStableLaw`)
    so that invalid measures can still be inspected with
    :func:`marginal_check`.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("an angular measure needs at least one atom")
        if w.shape != (pts.shape[0],):
            raise ValueError(f"got {pts.shape[0]} atoms but {w.size} weights")
        if np.any(pts < 0) or np.any(np.abs(pts.sum(axis=1) - 1.0) > SIMPLEX_TOL):
            raise ValueError("atoms must lie on the positive l1 unit simplex")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        pts.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def __len__(self):
        return self.points.shape[0]

    def moments(self) -> np.ndarray:
        """``sum_k w_k u_k^j`` for each coordinate ``j``."""
        return self.weights @ self.points

    def merged(self) -> "AngularMeasure":
        """Same measure with coincident atoms (within ``MERGE_TOL``) summed."""
        pts, w = [], []
        for p, wk in zip(self.points, self.weights):
            for i, q in enumerate(pts):
                if np.max(np.abs(p - q)) <= MERGE_TOL:
                    w[i] += wk
                    break
            else:
                pts.append(p.copy())
                w.append(float(wk))
        return AngularMeasure(np.array(pts), np.array(w))

    # canonical constructors -------------------------------------------------

    @classmethod
    def independence(cls, d: int) -> "AngularMeasure":
        return cls(np.eye(d), np.ones(d))

    @classmethod
    def dependence(cls, d: int) -> "AngularMeasure":
        return cls(np.full((1, d), 1.0 / d), np.array([float(d)]))

    @classmethod
    def mixture(cls, d: int, eps: float) -> "AngularMeasure":
        """``(1 - eps) * independence + eps * dependence``."""
        if not 0.0 <= eps <= 1.0:
            raise ValueError("mixture weight must lie in [0, 1]")
        pts = np.vstack([np.eye(d), np.full((1, d), 1.0 / d)])
        w = np.concatenate([np.full(d, 1.0 - eps), [eps * d]])
        return cls(pts, w)

    @classmethod
    def random(cls, d: int, rng: np.random.Generator, n_atoms: int = 3) -> "AngularMeasure":
        """A random measure satisfying the moment constraints exactly.

        Random simplex atoms with random weights are rescaled so the largest
        marginal moment is 1; the remaining deficit in each coordinate is
        filled by an atom at the corresponding basis vector.
        """
        pts = rng.dirichlet(np.ones(d), size=n_atoms)
        w = rng.uniform(0.2, 1.0, size=n_atoms)
        m = w @ pts
        w = w / m.max()
        deficit = 1.0 - w @ pts
        pts = np.vstack([pts, np.eye(d)])
        # deficits at rounding level are dropped rather than kept as dust atoms
        w = np.concatenate([w, np.where(deficit > 1e-12, deficit, 0.0)])
        keep = w > 0
        return cls(pts[keep], w[keep])


@dataclass(frozen=True, eq=False)
class MaxStableLaw:
    """The law MS(alpha, nu) of a simple max-stable vector."""

    alpha: float
    angular: AngularMeasure
    moment_tol: float = field(default=MOMENT_TOL, repr=False)

    def __post_init__(self):
        alpha = float(self.alpha)
        if not (alpha > 0 and math.isfinite(alpha)):
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")
        object.__setattr__(self, "alpha", alpha)
        dev = marginal_check(self.angular)
        if np.any(dev > self.moment_tol):
            raise ValueError(f"angular measure violates the moment constraints (deviations {dev})")

    @property
    def dimension(self) -> int:
        return self.angular.dimension

    def marks(self) -> np.ndarray:
        """Atoms pushed forward by ``u -> u**(1/alpha)``."""
        return pushforward_alpha(self.angular, self.alpha)

    def require_alpha_above_one(self, what: str = "this operation"):
        if self.alpha <= 1:
            raise DomainError(f"{what} requires alpha > 1, got alpha={self.alpha}")

    def with_alpha(self, alpha: float) -> "MaxStableLaw":
        return MaxStableLaw(alpha, self.angular, self.moment_tol)


@dataclass(frozen=True)
class Rectangle:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or np.any(lo < 0) or np.any(hi < lo):
            raise ValueError("rectangle needs 0 <= lower <= upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.all((x >= self.lower) & (x <= self.upper), axis=-1)


# functionals ---------------------------------------------------------------

def exponent_complement(law: MaxStableLaw, z) -> np.ndarray | float:
    """``mu([0, z]^c)`` for strictly positive ``z`` (vectorised over leading axes)."""
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != law.dimension:
        raise ValueError(f"expected {law.dimension} coordinates, got shape {z.shape}")
    if np.any(z <= 0) or np.any(np.isnan(z)):
        raise DomainError("exponent_complement needs strictly positive coordinates")
    with np.errstate(over="ignore"):
        s = z[..., None, :] ** (-law.alpha)
    val = np.max(law.angular.points * s, axis=-1) @ law.angular.weights
    return float(val) if np.ndim(val) == 0 else val


def cdf(law: MaxStableLaw, z) -> np.ndarray | float:
    """Joint CDF ``exp(-mu([0, z]^c))``; zero when a coordinate is nonpositive."""
    z = np.asarray(z, dtype=float)
    pos = np.all(z > 0, axis=-1)
    safe = np.where(pos[..., None], z, 1.0)
    out = np.where(pos, np.exp(-exponent_complement(law, safe)), 0.0)
    return float(out) if np.ndim(out) == 0 else out


def marginal_check(measure) -> np.ndarray:
    """Per-coordinate deviation ``|sum_k w_k u_k^j - 1|``."""
    nu = measure.angular if isinstance(measure, MaxStableLaw) else measure
    return np.abs(nu.moments() - 1.0)


def tv_distance(nu1: AngularMeasure, nu2: AngularMeasure) -> float:
    """L1 norm of ``nu2 - nu1`` over the union of atoms.

    No factor 1/2: for two measures of equal mass this is twice the usual
    probabilists' total variation.
    """
    if nu1.dimension != nu2.dimension:
        raise ValueError("measures live in different dimensions")
    a, b = nu1.merged(), nu2.merged()
    total = 0.0
    used = np.zeros(len(b), dtype=bool)
    for p, w in zip(a.points, a.weights):
        match = np.flatnonzero(np.max(np.abs(b.points - p), axis=1) <= MERGE_TOL)
        if match.size:
            total += abs(w - b.weights[match[0]])
            used[match[0]] = True
        else:
            total += w
    return float(total + b.weights[~used].sum())


def pushforward_alpha(nu: AngularMeasure, alpha: float) -> np.ndarray:
    """Atom locations of the image of ``nu`` under ``u -> u**(1/alpha)``.

    Weights are unchanged, so only the transformed points are returned.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return nu.points ** (1.0 / alpha)


# law files -----------------------------------------------------------------

def format_law(law: MaxStableLaw) -> str:
    lines = [f"{law.dimension} {law.alpha!r}"]
    for w, u in zip(law.angular.weights, law.angular.points):
        lines.append(" ".join(repr(float(v)) for v in (w, *u)))
    return "\n".join(lines) + "\n"


def parse_law(text: str, moment_tol: float = MOMENT_TOL) -> MaxStableLaw:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or len(rows[0]) != 2:
        raise ValueError("law file must start with a 'd alpha' header")
    d, alpha = int(rows[0][0]), float(rows[0][1])
    body = np.array([[float(v) for v in r] for r in rows[1:]])
    if body.ndim != 2 or body.shape[1] != d + 1:
        raise ValueError(f"each atom line needs a weight and {d} coordinates")
    return MaxStableLaw(alpha, AngularMeasure(body[:, 1:], body[:, 0]), moment_tol)


def read_law(path) -> MaxStableLaw:
    return parse_law(Path(path).read_text())


def write_law(law: MaxStableLaw, path) -> None:
    Path(path).write_text(format_law(law))
