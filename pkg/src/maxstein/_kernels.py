"""Compiled inner loops for the bank-wide jump operator.

The radial integral for each atom is taken in ``u = r**-alpha``, split at the
points where ``x (+) r v`` changes which coordinates it replaces, and each
smooth piece gets a fixed Gauss-Legendre rule.
"""

import math

import numpy as np
from numba import njit

from .testfunctions import CAPPED_SOFTMIN, CLIP_COORD, CLIP_MEAN, SMOOTH_BOX


@njit(cache=True, fastmath=True, inline="always")
def _softplus(t):
    if t > 0:
        return t + math.log1p(math.exp(-t))
    return math.log1p(math.exp(t))


@njit(cache=True, fastmath=True, inline="always")
def _expit(t):
    if t >= 0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


@njit(cache=True, fastmath=True)
def eval_member(code, p, y):
    d = y.shape[0]
    if code == CLIP_COORD:
        j = int(p[0])
        return p[1] - p[2] * _softplus((p[1] - y[j]) / p[2])
    if code == CLIP_MEAN:
        m = 0.0
        for j in range(d):
            m += y[j]
        m /= d
        return p[0] - p[1] * _softplus((p[0] - m) / p[1])
    if code == CAPPED_SOFTMIN:
        c, tau = p[0], p[1]
        top = -c / tau
        for j in range(d):
            top = max(top, -y[j] / tau)
        s = math.exp(-c / tau - top)
        for j in range(d):
            s += math.exp(-y[j] / tau - top)
        return -tau * (top + math.log(s))
    if code == SMOOTH_BOX:
        c, s = p[0], p[1]
        out = s
        for j in range(d):
            out *= _expit((c - y[j]) / s)
        return out
    return math.nan


@njit(cache=True, fastmath=True, inline="always")
def _piece_bases(code, p, xi, changed, d):
    """Part of a member's value that only involves coordinates left at ``x``."""
    if code == CLIP_MEAN:
        b = 0.0
        for j in range(d):
            if not changed[j]:
                b += xi[j]
        return b
    if code == CAPPED_SOFTMIN:
        b = math.exp(-p[0] / p[1])
        for j in range(d):
            if not changed[j]:
                b += math.exp(-xi[j] / p[1])
        return b
    if code == SMOOTH_BOX:
        b = p[1]
        for j in range(d):
            if not changed[j]:
                b *= _expit((p[0] - xi[j]) / p[1])
        return b
    return 0.0


SATURATE = 36.0  # exp(-36) ~ 2e-16: terms beyond this are dropped as rounding noise


@njit(cache=True, fastmath=True, inline="always")
def _eval_changed(code, c, tau, base, r, v, idx, nc, d):
    """Member value at ``x (+) r v`` given the piece base and the changed coordinates ``idx[:nc]``."""
    if code == CLIP_MEAN:
        m = base
        for a in range(nc):
            m += r * v[idx[a]]
        t = (c - m / d) / tau
        if t < -SATURATE:
            return c - tau * math.exp(t)
        return c - tau * _softplus(t)
    if code == CAPPED_SOFTMIN:
        # every term is at most one and the cap term is positive, so no shift is needed
        s = base
        for a in range(nc):
            t = r * v[idx[a]] / tau
            if t < SATURATE:
                s += math.exp(-t)
        return -tau * math.log(s)
    if code == SMOOTH_BOX:
        out = base
        for a in range(nc):
            t = (c - r * v[idx[a]]) / tau
            if t < -SATURATE:
                return 0.0
            out *= _expit(t)
        return out
    return math.nan


@njit(cache=True, fastmath=True)
def jump_bank(x, marks, weights, alpha, codes, params, gl_x, gl_w, stretch, n_tail, density):
    """``gl_x[n], gl_w[n]`` hold the n-point rule (padded); bounded pieces get
    ``ceil(density * log(hi/lo) / alpha)`` nodes, clipped to ``[2, n_tail]``.

    Coordinate clips are not handled here (see ``semigroup.clip_tail``).
    """
    n, d = x.shape
    m = codes.shape[0]
    out = np.zeros((n, m))
    hx = np.empty(m)
    acc = np.empty(m)
    base = np.empty(m)
    brk = np.empty(d + 1)
    ubrk = np.empty(d)
    changed = np.zeros(d, dtype=np.bool_)
    idx = np.empty(d, dtype=np.int64)
    pc = params[:, 0].copy()
    pt = params[:, 1].copy()
    # tail rule in s with u = hi * s**stretch: r / r(hi) and du / hi, times the weight
    tail_r = np.empty(n_tail)
    tail_w = np.empty(n_tail)
    for q in range(n_tail):
        sq = gl_x[n_tail, q]
        tail_r[q] = sq ** (-stretch / alpha)
        tail_w[q] = stretch * sq ** (stretch - 1.0) * gl_w[n_tail, q]
    for i in range(n):
        xi = x[i]
        for f in range(m):
            hx[f] = eval_member(codes[f], params[f], xi)
            acc[f] = 0.0
        for k in range(marks.shape[0]):
            wk = weights[k]
            if wk == 0.0:
                continue
            v = marks[k]
            nb = 1
            brk[0] = 0.0
            for j in range(d):
                if v[j] > 0.0:
                    ubrk[j] = (xi[j] / v[j]) ** (-alpha)
                    brk[nb] = ubrk[j]
                    nb += 1
                else:
                    ubrk[j] = -1.0
            # insertion sort of the (at most d) break points
            for a in range(2, nb):
                key = brk[a]
                b = a - 1
                while b >= 1 and brk[b] > key:
                    brk[b + 1] = brk[b]
                    b -= 1
                brk[b + 1] = key
            for piece in range(nb - 1):
                lo, hi = brk[piece], brk[piece + 1]
                if hi <= lo:
                    continue
                # on this piece coordinate j is replaced by r v^j exactly when its break lies at or above hi
                nc = 0
                for j in range(d):
                    changed[j] = ubrk[j] >= hi
                    if changed[j]:
                        idx[nc] = j
                        nc += 1
                for f in range(m):
                    base[f] = _piece_bases(codes[f], params[f], xi, changed, d)
                if lo == 0.0:
                    nq = n_tail
                    rhi = hi ** (-1.0 / alpha)
                else:
                    logr = math.log(hi / lo)
                    nq = min(n_tail, max(2, int(math.ceil(density * logr / alpha))))
                for q in range(nq):
                    if lo == 0.0:
                        # unbounded radial piece: u = hi * s**stretch clusters nodes at large r
                        r = rhi * tail_r[q]
                        scale = wk * hi * tail_w[q]
                    else:
                        # bounded piece: geometric in u, i.e. uniform in log r
                        u = lo * math.exp(gl_x[nq, q] * logr)
                        r = u ** (-1.0 / alpha)
                        scale = wk * u * logr * gl_w[nq, q]
                    for f in range(m):
                        acc[f] += scale * (_eval_changed(codes[f], pc[f], pt[f], base[f], r, v, idx, nc, d) - hx[f])
        for f in range(m):
            out[i, f] = acc[f]
    return out


@njit(cache=True)
def dominance_2d(order, first, ranks, m, strict):
    """Sweep over points sorted by the first coordinate with a Fenwick tree on
    the ranks of the second; returns per-point dominance counts."""
    n = order.shape[0]
    tree = np.zeros(m + 1, dtype=np.int64)
    out = np.empty(n, dtype=np.int64)
    i = 0
    while i < n:
        j = i
        while j < n and first[order[j]] == first[order[i]]:
            j += 1
        for phase in range(2):
            # inserting the tie group before querying makes the count non-strict
            if phase == (1 if strict else 0):
                for a in range(i, j):
                    k = ranks[order[a]] + 1
                    while k <= m:
                        tree[k] += 1
                        k += k & -k
            else:
                for a in range(i, j):
                    g = order[a]
                    k = ranks[g] if strict else ranks[g] + 1
                    s = 0
                    while k > 0:
                        s += tree[k]
                        k -= k & -k
                    out[g] = s
        i = j
    return out
