"""Quadrature helpers: composite Gauss-Legendre panels and a half-line
integrator for slowly (power-law) decaying integrands."""

import math
from functools import lru_cache

import numpy as np

from .errors import ToleranceError


@lru_cache(maxsize=32)
def gauss_legendre(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_rule(breaks, n):
    """Nodes and weights of an n-point Gauss-Legendre rule on every panel
    [breaks[i], breaks[i+1]]."""
    breaks = np.asarray(breaks, dtype=float)
    lo, hi = breaks[:-1], breaks[1:]
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]
    x0, w0 = gauss_legendre(n)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = (mid[:, None] + half[:, None] * x0[None, :]).ravel()
    weights = (half[:, None] * w0[None, :]).ravel()
    return nodes, weights


def graded_breaks(lo, hi, points=(), singular=(), levels=48):
    """Breakpoints on [lo, hi] split at `points`, with geometric grading
    toward every entry of `singular` (kept inside the interval).

    Grading resolves integrands whose scale shrinks near a point, such as
    log(1 + s^2 z(x)^2) near a root of z for large s.
    """
    base = {float(lo), float(hi)}
    for p in list(points) + list(singular):
        if lo < p < hi:
            base.add(float(p))
    base = np.array(sorted(base))
    sing = np.array([p for p in singular if lo <= p <= hi], dtype=float)
    if sing.size == 0:
        return base
    out = [base]
    factors = 2.0 ** -np.arange(1, levels + 1)
    for a, b in zip(base[:-1], base[1:]):
        width = b - a
        if np.any(np.isclose(sing, a, rtol=0, atol=1e-15 * max(1.0, abs(a)))):
            out.append(a + width * factors)
        if np.any(np.isclose(sing, b, rtol=0, atol=1e-15 * max(1.0, abs(b)))):
            out.append(b - width * factors)
    return np.unique(np.concatenate(out))


def integrate_halfline(fn, atol=1e-10, first=1.0, order=32, max_panels=520,
                       min_panels=6, s_cap=1e150):
    """Integrate fn over [0, inf).

    `fn` maps a 1-D array of abscissae to an array whose last axis matches
    it, so a batch of integrands is handled at once. Panels double in
    width starting from [0, first]. After each panel the remaining tail is
    estimated from the ratio of the last two panel contributions (exact
    for power-law decay); integration stops once both the last panel and
    the tail estimate fall below `atol` for every batch member. The tail
    estimate is added to the result.

    Returns (value, error_estimate).
    """
    x0, w0 = gauss_legendre(order)
    total = None
    prev = None
    lo, hi = 0.0, float(first)
    err = np.inf
    for k in range(max_panels):
        half = 0.5 * (hi - lo)
        s = 0.5 * (hi + lo) + half * x0
        vals = np.asarray(fn(s))
        contrib = vals @ (half * w0)
        total = contrib if total is None else total + contrib
        if k + 1 >= min_panels and prev is not None:
            a_prev = np.abs(prev)
            a_cur = np.abs(contrib)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(a_prev > 0, a_cur / a_prev, 0.0)
            geometric = ratio < 0.999
            tail = np.where(geometric, contrib * ratio / (1.0 - np.minimum(ratio, 0.999)), np.inf)
            tail = np.where(a_cur == 0, 0.0, tail)
            err = float(np.max(np.abs(np.where(np.isfinite(tail), tail, np.inf))))
            if np.all(np.isfinite(tail)) and np.max(a_cur) < atol and err < atol:
                return total + np.where(np.isfinite(tail), tail, 0.0), err
        prev = contrib
        lo, hi = hi, 2.0 * hi
        if hi > s_cap:
            break
    raise ToleranceError(
        f"half-line integral did not converge to {atol:g}", achieved=err
    )


def integrate_logscale(fn, s_start, atol=1e-10, width=0.5, order=16, max_panels=4000):
    """Integrate fn over [0, inf) after substituting s = exp(u).

    Starts at s_start, where fn must already be close to its s -> 0 limit
    (the piece [0, s_start] is taken as s_start * fn(s_start)), then
    marches right in u-panels of fixed width until the geometric tail
    estimate is below atol. A different discretisation from
    integrate_halfline, which makes the two usable as cross-checks.
    """
    x0, w0 = gauss_legendre(order)
    u = math.log(s_start)
    head = s_start * np.asarray(fn(np.array([s_start])))[..., 0]
    total = head
    prev = None
    half = 0.5 * width
    err = np.inf
    for k in range(max_panels):
        uu = u + half + half * x0
        s = np.exp(uu)
        vals = np.asarray(fn(s)) * s
        contrib = vals @ (half * w0)
        total = total + contrib
        if prev is not None and k >= 8:
            a_prev, a_cur = np.abs(prev), np.abs(contrib)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(a_prev > 0, a_cur / a_prev, 0.0)
            if np.all(ratio < 0.999):
                tail = contrib * ratio / (1.0 - ratio)
                err = float(np.max(np.abs(tail)))
                if np.max(a_cur) < atol and err < atol:
                    return total + tail, err
        prev = contrib
        u += width
        if u > 345.0:
            break
    raise ToleranceError(f"log-scale integral did not converge to {atol:g}", achieved=err)
