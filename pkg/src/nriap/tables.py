"""Cumulative integral tables with accurate inversion.

Used wherever we need the d.f. and quantile of a nonnegative function on
an interval: densities of base measures, and the tilted densities the
latent samplers draw from.
"""

import numpy as np

from .quadrature import gauss_legendre

_CELL_ORDER = 16


class CumulativeTable:
    """Running integral C(x) = int_lo^x f of a nonnegative vectorized f.

    The interval is split at `breaks` (kinks of f), every piece is cut into
    equal cells, and every cell carries a 16-point Gauss-Legendre rule.
    Partial cells are integrated with the same rule mapped onto [edge, x],
    so C is spectrally accurate for piecewise-smooth f.
    """

    def __init__(self, f, lo, hi, breaks=(), cells=1024):
        if not hi > lo:
            raise ValueError("empty interval")
        self.f = f
        self.lo, self.hi = float(lo), float(hi)
        pts = sorted({self.lo, self.hi, *(float(b) for b in breaks if lo < b < hi)})
        per = max(4, cells // (len(pts) - 1))
        edges = [np.linspace(a, b, per + 1)[:-1] for a, b in zip(pts[:-1], pts[1:])]
        self.edges = np.concatenate(edges + [np.array([self.hi])])
        x0, w0 = gauss_legendre(_CELL_ORDER)
        a, b = self.edges[:-1], self.edges[1:]
        half = 0.5 * (b - a)
        nodes = 0.5 * (a + b)[:, None] + half[:, None] * x0[None, :]
        vals = np.asarray(f(nodes.ravel()), dtype=float).reshape(nodes.shape)
        if np.any(vals < 0):
            raise ValueError("cumulative table needs a nonnegative integrand")
        cell = (vals * w0[None, :]).sum(axis=1) * half
        self.cum = np.concatenate([[0.0], np.cumsum(cell)])

    @property
    def total(self):
        return float(self.cum[-1])

    def _partial(self, x, cell):
        a = self.edges[cell]
        x0, w0 = gauss_legendre(_CELL_ORDER)
        half = 0.5 * (x - a)
        nodes = (0.5 * (x + a))[:, None] + half[:, None] * x0[None, :]
        vals = np.asarray(self.f(nodes.ravel()), dtype=float).reshape(nodes.shape)
        return (vals * w0[None, :]).sum(axis=1) * half

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), self.lo, self.hi)
        flat = x.reshape(-1)
        cell = np.clip(np.searchsorted(self.edges, flat, side="right") - 1, 0, len(self.edges) - 2)
        out = self.cum[cell] + self._partial(flat, cell)
        return out.reshape(x.shape)

    def quantile(self, q, iters=60):
        """Smallest x with C(x) >= q, for q in [0, total]."""
        q = np.asarray(q, dtype=float)
        flat = np.clip(q.reshape(-1), 0.0, self.total)
        cell = np.clip(np.searchsorted(self.cum, flat, side="left") - 1, 0, len(self.edges) - 2)
        a = self.edges[cell].copy()
        b = self.edges[cell + 1].copy()
        base = self.cum[cell]
        target = flat - base
        width = self.cum[cell + 1] - base
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(width > 0, target / width, 0.0)
        x = a + np.clip(frac, 0.0, 1.0) * (b - a)
        tol = 1e-15 * np.maximum(1.0, np.abs(x))
        for _ in range(iters):
            resid = self._partial(x, cell) - target
            a = np.where(resid < 0, x, a)
            b = np.where(resid >= 0, x, b)
            fx = np.asarray(self.f(x), dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = np.where(fx > 0, resid / fx, np.nan)
            newton = x - step
            ok = np.isfinite(newton) & (newton > a) & (newton < b)
            x_new = np.where(ok, newton, 0.5 * (a + b))
            converged = np.abs(x_new - x) <= tol
            x = x_new
            if np.all(converged | (b - a <= tol)):
                break
        return x.reshape(q.shape)
