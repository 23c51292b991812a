"""Phase-adaptive quadrature for 1-d oscillatory integrals.

Two complementary panel rules:

  * Gauss-Legendre panels where the phase varies slowly (the node density
    keeps >= ~6 nodes per oscillation), including stationary-point windows
    refined dyadically with innermost width ~ |phase''|^(-1/2);
  * Levin collocation panels where the phase is fast but monotone: solving
    p' + i phase' p = g  on Chebyshev nodes turns the integral into pure
    boundary terms, so the cost is independent of the oscillation count.

Every driver accepts a `refine` factor used to re-run at higher resolution
for error estimates.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _gl(m: int):
    x, w = np.polynomial.legendre.leggauss(m)
    return x, w


@lru_cache(maxsize=32)
def _cheb(m: int):
    """Chebyshev-Lobatto nodes (descending) and differentiation matrix."""
    if m == 0:
        return np.array([1.0]), np.zeros((1, 1))
    j = np.arange(m + 1)
    x = np.cos(np.pi * j / m)
    c = np.ones(m + 1)
    c[0] = c[m] = 2.0
    c = c * (-1.0) ** j
    X = np.tile(x, (m + 1, 1)).T
    dX = X - X.T
    D = np.outer(c, 1.0 / c) / (dX + np.eye(m + 1))
    D -= np.diag(D.sum(axis=1))
    return x, D

#: phase radians per GL node (~6 nodes per oscillation)
PHASE_PER_NODE = np.pi / 3.0
GL_NODES = 20
LEVIN_NODES = 20
#: above this per-panel phase spread GL panels hand over to Levin
GL_MAX_PHASE = GL_NODES * PHASE_PER_NODE


def gl_panel(f, a: float, b: float, m: int) -> complex:
    x, w = _gl(m)
    half = 0.5 * (b - a)
    nodes = 0.5 * (a + b) + half * x
    return complex(np.sum(f(nodes) * w) * half)


def levin_panel(g, phase, phase_rate, a: float, b: float,
                m: int) -> complex:
    """Levin collocation on [a, b]; needs phase' bounded away from 0."""
    x, D = _cheb(m)
    half = 0.5 * (b - a)
    r = 0.5 * (a + b) + half * x
    A = D / half + 1j * np.diag(phase_rate(r))
    try:
        p = np.linalg.solve(A, g(r).astype(complex))
    except np.linalg.LinAlgError:
        p, *_ = np.linalg.lstsq(A, g(r).astype(complex), rcond=None)
    # nodes are descending: r[0] = b, r[-1] = a
    return complex(p[0] * np.exp(1j * phase(b))
                   - p[-1] * np.exp(1j * phase(a)))


def _panel_value(g, phase, phase_rate, a: float, b: float, refine: float,
                 depth: int = 0) -> complex:
    ra, rb = phase_rate(a), phase_rate(b)
    spread = 0.5 * (abs(ra) + abs(rb)) * (b - a)
    if spread <= GL_MAX_PHASE / refine or depth >= 24:
        m = int(min(max(GL_NODES, spread / PHASE_PER_NODE * refine) + 4, 64))
        return gl_panel(lambda r: g(r) * np.exp(1j * phase(r)), a, b, m)
    min_rate = min(abs(ra), abs(rb))
    if np.sign(ra) == np.sign(rb) and min_rate * (b - a) > 4.0 * LEVIN_NODES:
        m = int(LEVIN_NODES * min(refine, 2.0))
        return levin_panel(g, phase, phase_rate, a, b, m)
    mid = 0.5 * (a + b)
    return (_panel_value(g, phase, phase_rate, a, mid, refine, depth + 1)
            + _panel_value(g, phase, phase_rate, mid, b, refine, depth + 1))


def integrate_oscillatory(g, phase, phase_rate, a: float, b: float,
                          knots=(), refine: float = 1.0) -> complex:
    """integral of g(r) * exp(i*phase(r)) over [a, b].

    `phase_rate` is the signed derivative of the phase (vectorized);
    `knots` are breakpoints the panels must respect: joints of the
    amplitude profile and the dyadic stationary-point windows.
    """
    pts = np.array([a] + sorted(float(t) for t in set(knots) if a < t < b)
                   + [b])
    total = 0.0 + 0.0j
    for lo, hi in zip(pts[:-1], pts[1:]):
        def rate_scalar(r, _pr=phase_rate):
            return float(np.atleast_1d(_pr(np.asarray([r])))[0])
        total += _panel_value(g, phase,
                              lambda r: np.atleast_1d(phase_rate(r)),
                              float(lo), float(hi), refine)
    return total


def stationary_knots(phase_rate, curvature: float, a: float, b: float):
    """Dyadic refinement knots around the (single) zero of `phase_rate`.

    `phase_rate` must be monotone on [a, b]; `curvature` bounds |phase''|
    near the zero, setting the innermost half-width ~ sqrt(2*pi/|phase''|)
    (the stationary-phase window).  Returns [] if no sign change.
    """
    fa, fb = phase_rate(a), phase_rate(b)
    if fa == 0.0:
        r0 = a
    elif fb == 0.0:
        r0 = b
    elif np.sign(fa) == np.sign(fb):
        return []
    else:
        lo_r, hi_r = a, b
        for _ in range(80):
            mid = 0.5 * (lo_r + hi_r)
            fm = phase_rate(mid)
            if fm == 0.0:
                break
            if np.sign(fm) == np.sign(phase_rate(lo_r)):
                lo_r = mid
            else:
                hi_r = mid
        r0 = 0.5 * (lo_r + hi_r)
    delta = np.sqrt(2.0 * np.pi / max(curvature, 1e-300))
    delta = min(delta, (b - a))
    knots = [r0]
    step = delta
    while step < (b - a):
        for s in (r0 - step, r0 + step):
            if a < s < b:
                knots.append(s)
        step *= 2.0
    return knots


# retained for dense tensor-product quadrature (cap kernels)

NODE_BUDGET = 300_000


def build_panels(a: float, b: float, rate_fn, knots=(),
                 nodes_per_panel: int = 16, refine: float = 1.0):
    """Split [a, b] into panels sized so GL nodes resolve the oscillation;
    `rate_fn(r)` bounds the local total phase speed."""
    pts = [a] + sorted(float(k) for k in set(knots) if a < k < b) + [b]
    edges = [a]
    max_phase = nodes_per_panel * PHASE_PER_NODE / refine
    nprobe = 64
    for lo, hi in zip(pts[:-1], pts[1:]):
        cursor = lo
        probe = np.linspace(lo, hi, nprobe + 1)
        local = np.broadcast_to(
            np.maximum(np.asarray(rate_fn(probe), dtype=float), 1e-30),
            probe.shape).copy()

        def rate_over(c0, c1):
            i0 = int(nprobe * (c0 - lo) / max(hi - lo, 1e-300))
            i1 = int(np.ceil(nprobe * (c1 - lo) / max(hi - lo, 1e-300)))
            return float(local[max(i0, 0):min(i1, nprobe) + 1].max())

        while cursor < hi - 1e-15 * max(abs(hi), 1.0):
            width = hi - cursor
            # iterate: the rate may grow across the tentative panel
            for _ in range(6):
                r = rate_over(cursor, cursor + width)
                w_new = min(hi - cursor, max_phase / r)
                if w_new >= 0.99 * width:
                    break
                width = w_new
            nxt = min(hi, cursor + width)
            edges.append(nxt)
            cursor = nxt
            if len(edges) * nodes_per_panel > NODE_BUDGET:
                raise RuntimeError("oscillatory quadrature node budget "
                                   "exhausted; integrand too oscillatory "
                                   "for this configuration")
    return np.asarray(edges)


def integrate_panels(f, edges: np.ndarray, nodes_per_panel: int = 16):
    """Sum of Gauss-Legendre panel integrals of the (complex) callable f."""
    x, w = _gl(nodes_per_panel)
    lo = edges[:-1]
    hi = edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    vals = f(nodes).reshape(len(lo), -1)
    return complex(np.sum(vals * w[None, :] * half[:, None]))
