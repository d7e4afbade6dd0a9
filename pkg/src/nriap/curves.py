"""Tabulated distribution curves returned by the inversion and oracle code."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class DistCurve:
    """A c.d.f. or density tabulated on a strictly increasing grid.

    `stderr` is set for Monte Carlo curves; `meta` holds anything else a
    producer wants to report (effective sample size, warnings, ...).
    """

    grid: np.ndarray
    values: np.ndarray
    kind: str
    quad_tol: float = 0.0
    stderr: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise ValueError("grid and values must be 1-D arrays of equal length")
        if grid.size > 1 and np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if self.kind not in ("cdf", "density"):
            raise ValueError(f"unknown curve kind {self.kind!r}")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if self.stderr is not None:
            object.__setattr__(self, "stderr", np.asarray(self.stderr, dtype=float))

    def integral(self):
        """Trapezoid integral of the values over the grid."""
        return float(np.trapezoid(self.values, self.grid))

    def mean(self):
        """Expectation of the law the curve describes, assuming the grid
        covers its support."""
        if self.kind == "density":
            return float(np.trapezoid(self.grid * self.values, self.grid) / self.integral())
        # E X = lo + int_lo^hi (1 - F)
        return float(self.grid[0] + np.trapezoid(1.0 - self.values, self.grid))

    def violations(self, slack=1e-6):
        """List of invariant violations (empty when the curve is valid)."""
        out = []
        v = self.values
        if self.kind == "cdf":
            if np.any(v < -slack) or np.any(v > 1 + slack):
                out.append("cdf values outside [0, 1]")
            if np.any(np.diff(v) < -slack):
                out.append("cdf not monotone")
        else:
            if np.any(v < -1e-8):
                out.append("negative density")
        return out
