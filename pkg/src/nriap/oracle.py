"""Brute-force references: stick-breaking Dirichlet process draws and set
partition enumeration.

Nothing in here shares numerical code with the inversion module, so the
two can be checked against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curves import DistCurve

_CHUNK = 4096


@dataclass(frozen=True)
class DiscreteMeasure:
    locations: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to one")

    def integrate(self, f):
        return float(np.dot(self.weights, f(self.locations)))


def _sticks(a, rows, remainder_tol, rng):
    """Stick-breaking weights for `rows` independent measures.

    Returns (weights, n_used): weights[r, :n_used[r]] are the broken
    pieces and weights[r, n_used[r]] is the leftover mass, which goes to
    one extra atom; entries after that are zero.
    """
    k = max(8, int(math.ceil(a * math.log(1.0 / remainder_tol) * 1.5)) + 8)
    v = rng.beta(1.0, a, size=(rows, k))
    log_rem = np.cumsum(np.log1p(-v), axis=1)
    while np.any(log_rem[:, -1] >= math.log(remainder_tol)):
        more = rng.beta(1.0, a, size=(rows, k))
        v = np.concatenate([v, more], axis=1)
        log_rem = np.concatenate([log_rem, log_rem[:, -1:] + np.cumsum(np.log1p(-more), axis=1)], axis=1)
    rem = np.exp(log_rem)
    # first index whose remaining mass is below tolerance
    stop = np.argmax(rem < remainder_tol, axis=1)
    prev_rem = np.concatenate([np.ones((rows, 1)), rem[:, :-1]], axis=1)
    w = v * prev_rem
    cols = np.arange(w.shape[1])[None, :]
    w = np.where(cols <= stop[:, None], w, 0.0)
    leftover = rem[np.arange(rows), stop]
    w = np.concatenate([w, np.zeros((rows, 1))], axis=1)
    w[np.arange(rows), stop + 1] = leftover
    return w, stop + 1


def stick_breaking_dp(alpha, remainder_tol=1e-8, rng=None):
    """One draw from the Dirichlet process with base measure alpha,
    truncated once the unbroken remainder drops below remainder_tol."""
    if not 0 < remainder_tol < 1:
        raise ValueError("remainder_tol must lie in (0, 1)")
    rng = np.random.default_rng() if rng is None else rng
    w, used = _sticks(alpha.total_mass, 1, remainder_tol, rng)
    n = int(used[0]) + 1
    weights = w[0, :n]
    locs = alpha.sample(rng, n)
    keep = weights > 0
    weights = weights[keep]
    return DiscreteMeasure(locs[keep], weights / weights.sum())


def dp_mean_samples(alpha, h, samples, rng, remainder_tol=1e-8):
    """`samples` independent draws of int h dD with D ~ DP(alpha)."""
    out = np.empty(samples)
    a = alpha.total_mass
    done = 0
    while done < samples:
        rows = min(_CHUNK, samples - done)
        w, _ = _sticks(a, rows, remainder_tol, rng)
        locs = alpha.sample(rng, w.shape)
        out[done:done + rows] = (w * h(locs)).sum(axis=1)
        done += rows
    return out


def mc_mean_cdf(alpha, h, samples, grid, rng, remainder_tol=1e-8):
    """Empirical c.d.f. of int h dD on `grid`, with binomial standard errors."""
    if samples < 1000:
        raise ValueError("mc_mean_cdf needs at least 1000 samples")
    draws = np.sort(dp_mean_samples(alpha, h, samples, rng, remainder_tol))
    grid = np.asarray(grid, dtype=float)
    F = np.searchsorted(draws, grid, side="right") / samples
    se = np.sqrt(F * (1.0 - F) / samples)
    return DistCurve(grid, F, "cdf", stderr=se,
                     meta={"samples": samples, "mean": float(draws.mean()),
                           "mean_se": float(draws.std(ddof=1) / math.sqrt(samples))})


def enumerate_partitions(n):
    """Every set partition of {0, ..., n-1} exactly once, as a tuple of
    cells (tuples of indices), in lexicographic order of restricted growth
    strings."""
    if not 1 <= n <= 10:
        raise ValueError("enumerate_partitions supports 1 <= n <= 10")
    rgs = [0] * n
    maxes = [0] * n  # maxes[i] = max(rgs[:i+1])
    while True:
        k = max(rgs) + 1
        cells = [[] for _ in range(k)]
        for i, c in enumerate(rgs):
            cells[c].append(i)
        yield tuple(tuple(c) for c in cells)
        # advance to the next restricted growth string
        i = n - 1
        while i > 0 and rgs[i] > maxes[i - 1]:
            i -= 1
        if i == 0:
            return
        rgs[i] += 1
        maxes[i] = max(maxes[i - 1], rgs[i])
        for j in range(i + 1, n):
            rgs[j] = 0
            maxes[j] = maxes[i]


def bell(n):
    """Bell number by the Bell triangle."""
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]
