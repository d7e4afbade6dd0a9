"""Base measures, kernels, process specifications and mean functionals.

Everything here is immutable after construction. Vectorized callables take
and return numpy arrays.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import DomainError, NonIntegrableError
from .quadrature import graded_breaks, panel_rule
from .tables import CumulativeTable

DENSITY_ORDER = 256


# --------------------------------------------------------------------------
# Base measure
# --------------------------------------------------------------------------


class BaseMeasure:
    """Finite measure on the line: an optional density on a bounded
    interval plus finitely many atoms.

    Use the constructors `uniform`, `from_atoms`, `tabulated` and
    `from_density` rather than calling this directly.
    """

    def __init__(self, support=None, density=None, atoms=(), kinks=(), uniform_height=None):
        if (support is None) != (density is None):
            raise ValueError("support and density must be given together")
        if support is not None:
            lo, hi = float(support[0]), float(support[1])
            if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
                raise ValueError(f"density support must be a bounded nonempty interval, got {support!r}")
            support = (lo, hi)
        self._support = support
        self._density = density
        self._uniform = uniform_height
        self._kinks = tuple(sorted(float(k) for k in kinks if support and support[0] < k < support[1]))

        locs = np.array([float(a[0]) for a in atoms], dtype=float)
        masses = np.array([float(a[1]) for a in atoms], dtype=float)
        if np.any(~np.isfinite(locs)) or np.any(~(masses > 0)) or np.any(~np.isfinite(masses)):
            raise ValueError("atoms need finite locations and positive finite masses")
        if len(np.unique(locs)) != len(locs):
            raise ValueError("atom locations must be distinct")
        order = np.argsort(locs)
        self.atom_locations = locs[order]
        self.atom_masses = masses[order]
        self.atom_locations.setflags(write=False)
        self.atom_masses.setflags(write=False)

        self._table = None
        if support is not None:
            if uniform_height is not None:
                self.density_mass = uniform_height * (support[1] - support[0])
            else:
                self._table = CumulativeTable(self.density, support[0], support[1], breaks=self._kinks)
                self.density_mass = self._table.total
        else:
            self.density_mass = 0.0
        self.total_mass = float(self.density_mass + self.atom_masses.sum())
        if not (math.isfinite(self.total_mass) and self.total_mass > 0):
            raise ValueError("base measure must have finite, strictly positive total mass")

    # constructors ---------------------------------------------------------

    @classmethod
    def uniform(cls, lo, hi, mass=None):
        """Lebesgue-like measure on [lo, hi]; mass defaults to hi - lo."""
        mass = float(hi - lo) if mass is None else float(mass)
        height = mass / (hi - lo)
        return cls(support=(lo, hi), density=lambda x: np.full(np.shape(x), height),
                   uniform_height=height)

    @classmethod
    def from_atoms(cls, locations, masses):
        return cls(atoms=list(zip(locations, masses)))

    @classmethod
    def tabulated(cls, x, density, atoms=()):
        """Piecewise-linear density through the points (x_i, density_i)."""
        x = np.asarray(x, dtype=float)
        d = np.asarray(density, dtype=float)
        if x.ndim != 1 or x.shape != d.shape or len(x) < 2 or np.any(np.diff(x) <= 0):
            raise ValueError("tabulated density needs a strictly increasing grid of >= 2 points")
        if np.any(d < 0):
            raise ValueError("density values must be nonnegative")

        def dens(t):
            t = np.asarray(t, dtype=float)
            return np.where((t >= x[0]) & (t <= x[-1]), np.interp(t, x, d), 0.0)

        return cls(support=(x[0], x[-1]), density=dens, atoms=atoms, kinks=x[1:-1])

    @classmethod
    def from_density(cls, fn, lo, hi, atoms=(), kinks=()):
        def dens(t):
            t = np.asarray(t, dtype=float)
            inside = (t >= lo) & (t <= hi)
            out = np.zeros(t.shape)
            out[inside] = np.asarray(fn(t[inside]), dtype=float)
            return out

        return cls(support=(lo, hi), density=dens, atoms=atoms, kinks=kinks)

    def with_atoms(self, locations, masses=None):
        """This measure plus point masses (unit masses by default); used for
        alpha + sum_i delta_{u_i}."""
        locations = np.asarray(locations, dtype=float).reshape(-1)
        masses = np.ones_like(locations) if masses is None else np.asarray(masses, dtype=float).reshape(-1)
        merged = dict(zip(self.atom_locations.tolist(), self.atom_masses.tolist()))
        for loc, m in zip(locations.tolist(), masses.tolist()):
            merged[loc] = merged.get(loc, 0.0) + m
        new = object.__new__(BaseMeasure)
        new.__dict__.update(self.__dict__)
        locs = np.array(sorted(merged))
        new.atom_locations = locs
        new.atom_masses = np.array([merged[k] for k in locs.tolist()])
        new.total_mass = float(new.density_mass + new.atom_masses.sum())
        return new

    # queries --------------------------------------------------------------

    @property
    def support(self):
        """(lo, hi) of the density part, or None."""
        return self._support

    @property
    def kinks(self):
        return self._kinks

    @property
    def has_density(self):
        return self._support is not None

    @property
    def is_uniform(self):
        return self._uniform is not None

    @property
    def span(self):
        """Smallest closed interval holding all of the mass."""
        pts = list(self.atom_locations)
        if self._support:
            pts += list(self._support)
        return min(pts), max(pts)

    def density(self, x):
        if self._support is None:
            return np.zeros(np.shape(x))
        return self._density(x)

    def density_cdf(self, x):
        """Mass of the density part on (-inf, x]."""
        if self._support is None:
            return np.zeros(np.shape(x))
        lo, hi = self._support
        if self._uniform is not None:
            return self._uniform * (np.clip(x, lo, hi) - lo)
        return self._table.cdf(x)

    def density_quantile(self, q):
        """Inverse of density_cdf on [0, density_mass]."""
        lo, hi = self._support
        q = np.asarray(q, dtype=float)
        if self._uniform is not None:
            return lo + np.clip(q, 0.0, self.density_mass) / self._uniform
        return self._table.quantile(q)

    def cdf(self, x):
        """A(x) = alpha((-inf, x])."""
        x = np.asarray(x, dtype=float)
        out = np.asarray(self.density_cdf(x), dtype=float)
        if self.atom_locations.size:
            out = out + (x[..., None] >= self.atom_locations).astype(float) @ self.atom_masses
        return out

    def quantile(self, p):
        """inf{x : A(x) >= p} for p in [0, total_mass]."""
        p_in = np.asarray(p, dtype=float)
        if not self.atom_locations.size:
            return self.density_quantile(p_in)
        p = np.atleast_1d(p_in)
        out = np.empty_like(p)
        locs, masses = self.atom_locations, self.atom_masses
        before = np.concatenate([[0.0], np.cumsum(masses)])
        # density mass up to each atom
        dens_at = np.asarray(self.density_cdf(locs), dtype=float) if locs.size else np.zeros(0)
        for i, pi in enumerate(p):
            # find first atom whose closed cdf reaches pi
            hit = None
            for k in range(locs.size):
                if dens_at[k] + before[k + 1] >= pi:
                    hit = k
                    break
            if hit is not None and dens_at[hit] + before[hit] < pi:
                out[i] = locs[hit]
                continue
            n_atoms_below = hit if hit is not None else locs.size
            out[i] = float(self.density_quantile(pi - before[n_atoms_below]))
        return out.reshape(p_in.shape)

    def sample(self, rng, size):
        """i.i.d. draws from alpha / total_mass."""
        u = rng.uniform(0.0, self.total_mass, size=size)
        return self._sample_from_uniforms(u)

    def _sample_from_uniforms(self, u):
        u = np.asarray(u, dtype=float)
        out = np.empty(u.shape)
        in_density = u < self.density_mass
        if in_density.any():
            out[in_density] = self.density_quantile(u[in_density])
        if (~in_density).any():
            cum = np.cumsum(self.atom_masses)
            idx = np.searchsorted(cum, u[~in_density] - self.density_mass, side="right")
            out[~in_density] = self.atom_locations[np.minimum(idx, len(cum) - 1)]
        return out

    def density_rule(self, points=(), singular=(), order=None, levels=48):
        """Quadrature nodes and weights (density folded in) for the density
        part, split at kinks and `points`, graded toward `singular`."""
        if self._support is None:
            return np.zeros(0), np.zeros(0)
        lo, hi = self._support
        breaks = graded_breaks(lo, hi, points=list(self._kinks) + list(points), singular=singular,
                               levels=levels)
        if order is None:
            order = DENSITY_ORDER if len(breaks) <= 16 else 24
        x, w = panel_rule(breaks, order)
        return x, w * self.density(x)

    def integrate(self, f, points=()):
        """int f d(alpha) for vectorized f."""
        x, w = self.density_rule(points=points)
        total = float(np.dot(w, f(x))) if x.size else 0.0
        if self.atom_locations.size:
            total += float(np.dot(self.atom_masses, f(self.atom_locations)))
        return total

    def __repr__(self):
        parts = []
        if self._support:
            parts.append(f"density on [{self._support[0]:g}, {self._support[1]:g}] mass {self.density_mass:g}")
        if self.atom_locations.size:
            parts.append(f"{self.atom_locations.size} atoms")
        return f"BaseMeasure({', '.join(parts)}; total {self.total_mass:g})"


# --------------------------------------------------------------------------
# Kernels
# --------------------------------------------------------------------------


class Kernel:
    """k(t, x): nondecreasing in t, right-continuous, vanishing as t -> -inf."""

    family = "abstract"
    absolutely_continuous = True

    def value(self, t, x):
        raise NotImplementedError

    def deriv(self, t, x):
        raise NotImplementedError

    def limit(self, x):
        raise NotImplementedError

    def breakpoints(self, t):
        """x locations where k(t, .) or k'(t, .) may have kinks."""
        return ()


class ExpConvKernel(Kernel):
    """k(t, x) = (1 - exp(-rate (t - x))) / rate for 0 <= x <= t."""

    family = "exp_conv"

    def __init__(self, rate):
        rate = float(rate)
        if not rate > 0:
            raise ValueError("exp_conv rate must be positive")
        self.rate = rate

    def value(self, t, x):
        t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
        inside = (x >= 0) & (x <= t)
        d = np.where(inside, t - x, 0.0)
        return np.where(inside, -np.expm1(-self.rate * d) / self.rate, 0.0)

    def deriv(self, t, x):
        t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
        inside = (x >= 0) & (x <= t)
        d = np.where(inside, t - x, 0.0)
        return np.where(inside, np.exp(-self.rate * d), 0.0)

    def limit(self, x):
        return np.where(np.asarray(x, float) >= 0, 1.0 / self.rate, 0.0)

    def breakpoints(self, t):
        return (0.0, float(t))

    def __repr__(self):
        return f"ExpConvKernel(rate={self.rate:g})"


class IndicatorKernel(Kernel):
    """k(t, x) = 1{x <= t}; k' is a unit point mass at t = x."""

    family = "indicator"
    absolutely_continuous = False

    def value(self, t, x):
        t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
        return (x <= t).astype(float)

    def deriv(self, t, x):
        # singular part only; the point mass is handled by h_transform
        t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
        return np.zeros(t.shape)

    def limit(self, x):
        return np.ones(np.shape(x))

    def breakpoints(self, t):
        return (float(t),)

    def __repr__(self):
        return "IndicatorKernel()"


class TabulatedKernel(Kernel):
    """k given on a (t, x) grid: piecewise linear in t, linear in x.

    `values[i, j]` is k(t_grid[i], x_grid[j]). Queries outside the grid
    raise DomainError; k' is the piecewise slope in t (right derivative).
    """

    family = "user_tabulated"

    def __init__(self, t_grid, x_grid, values):
        self.t_grid = np.asarray(t_grid, dtype=float)
        self.x_grid = np.asarray(x_grid, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != (self.t_grid.size, self.x_grid.size):
            raise ValueError("values must have shape (len(t_grid), len(x_grid))")
        if self.t_grid.size < 2 or np.any(np.diff(self.t_grid) <= 0):
            raise ValueError("t_grid must be strictly increasing with >= 2 points")
        if self.x_grid.size < 2 or np.any(np.diff(self.x_grid) <= 0):
            raise ValueError("x_grid must be strictly increasing with >= 2 points")
        for arr in (self.t_grid, self.x_grid, self.values):
            arr.setflags(write=False)

    def _check(self, t, x):
        if np.any(t < self.t_grid[0]) or np.any(t > self.t_grid[-1]):
            raise DomainError("t outside the tabulated kernel grid")
        if np.any(x < self.x_grid[0]) or np.any(x > self.x_grid[-1]):
            raise DomainError("x outside the tabulated kernel grid")

    def _column(self, x):
        # values interpolated linearly in x: shape (len(t_grid), *x.shape)
        j = np.clip(np.searchsorted(self.x_grid, x, side="right") - 1, 0, self.x_grid.size - 2)
        w = (x - self.x_grid[j]) / (self.x_grid[j + 1] - self.x_grid[j])
        return self.values[:, j] * (1 - w) + self.values[:, j + 1] * w

    def value(self, t, x):
        t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
        self._check(t, x)
        col = self._column(x)
        i = np.clip(np.searchsorted(self.t_grid, t, side="right") - 1, 0, self.t_grid.size - 2)
        lam = (t - self.t_grid[i]) / (self.t_grid[i + 1] - self.t_grid[i])
        lo = np.take_along_axis(col, i[None, ...], axis=0)[0]
        hi = np.take_along_axis(col, (i + 1)[None, ...], axis=0)[0]
        return lo * (1 - lam) + hi * lam

    def deriv(self, t, x):
        t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
        self._check(t, x)
        col = self._column(x)
        i = np.clip(np.searchsorted(self.t_grid, t, side="right") - 1, 0, self.t_grid.size - 2)
        lo = np.take_along_axis(col, i[None, ...], axis=0)[0]
        hi = np.take_along_axis(col, (i + 1)[None, ...], axis=0)[0]
        return (hi - lo) / (self.t_grid[i + 1] - self.t_grid[i])

    def limit(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.x_grid[0]) or np.any(x > self.x_grid[-1]):
            raise DomainError("x outside the tabulated kernel grid")
        return np.interp(x, self.x_grid, self.values[-1])

    def breakpoints(self, t):
        return tuple(self.x_grid)

    def __repr__(self):
        return f"TabulatedKernel({self.t_grid.size}x{self.x_grid.size})"


def kernel_eval(kernel, t, x):
    """(k(t, x), k'(t, x), kbar(x)), vectorized over broadcastable t and x."""
    value = kernel.value(t, x)
    deriv = kernel.deriv(t, x)
    limit = kernel.limit(np.broadcast_to(np.asarray(x, float), np.shape(value)))
    if np.ndim(value) == 0:
        return float(value), float(deriv), float(limit)
    return value, deriv, limit


# --------------------------------------------------------------------------
# Process specification
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FixedJump:
    """A fixed point of discontinuity at `location` with Gamma(shape, rate) size."""

    location: float
    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise ValueError("fixed jump law needs positive shape and rate")


@dataclass(frozen=True)
class IapSpec:
    """Extended gamma IAP with intensity exp(-beta(x) v) v^-1 dv alpha(dx),
    optional fixed jumps, observed up to `upsilon`.

    `beta` is a positive float (constant rate) or a vectorized callable.
    """

    base: BaseMeasure
    beta: float | Callable = 1.0
    fixed_jumps: tuple = ()
    upsilon: float = math.inf

    def __post_init__(self):
        locs = [fj.location for fj in self.fixed_jumps]
        if len(set(locs)) != len(locs):
            raise ValueError("fixed jump locations must be distinct")
        if any(loc > self.upsilon for loc in locs):
            raise ValueError("fixed jumps must lie at or before upsilon")
        if not self.upsilon > 0:
            raise ValueError("upsilon must be positive")

    @property
    def beta_is_constant(self):
        return not callable(self.beta)

    def beta_fn(self, x):
        x = np.asarray(x, dtype=float)
        if callable(self.beta):
            return np.broadcast_to(np.asarray(self.beta(x), dtype=float), x.shape)
        return np.full(x.shape, float(self.beta))

    def with_upsilon(self, upsilon):
        return IapSpec(self.base, self.beta, self.fixed_jumps, upsilon)


# --------------------------------------------------------------------------
# Mean functionals
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Functional:
    """The function g of a mean int g dF, tagged with its form so that
    closed-form transforms can be used when available."""

    form: str
    params: tuple = ()
    fn: Callable | None = field(default=None, compare=False)

    @classmethod
    def identity(cls):
        return cls("identity")

    @classmethod
    def constant(cls, c):
        return cls("constant", (float(c),))

    @classmethod
    def indicator(cls, lo, hi):
        if not hi > lo:
            raise ValueError("indicator interval needs lo < hi")
        return cls("indicator_interval", (float(lo), float(hi)))

    @classmethod
    def user(cls, fn):
        return cls("user", (), fn)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.form == "identity":
            return t.copy()
        if self.form == "constant":
            return np.full(t.shape, self.params[0])
        if self.form == "indicator_interval":
            lo, hi = self.params
            return ((t >= lo) & (t <= hi)).astype(float)
        return np.asarray(self.fn(t), dtype=float)


@dataclass(frozen=True)
class MeanFunctional:
    """g together with h(x) = int g(t) k'(t, x) dt for one kernel.

    With finite `upsilon`, h is the horizon-truncated transform
    int_{-inf}^{upsilon} g(t) k'(t, x) dt, which is what the mean of
    F(t) = Z(t)/Z(upsilon) needs.
    """

    g: Functional
    kernel: Kernel
    h: Callable = field(compare=False)
    breakpoints: tuple = ()
    closed_form: bool = True
    upsilon: float = math.inf

    @property
    def form(self):
        return self.g.form

    def __call__(self, x):
        return self.h(x)

    def quadrature_h(self, x):
        """h at scalar x by direct quadrature of g k' (independent of the
        closed forms)."""
        return _h_by_quadrature(self.g, self.kernel, float(x), self.upsilon)

    def verify(self, xs, rtol=1e-6):
        """Largest relative gap between h and its quadrature at xs."""
        worst = 0.0
        for x in np.atleast_1d(xs):
            ref = self.quadrature_h(x)
            got = float(self.h(np.array(x)))
            scale = max(abs(ref), 1e-300)
            worst = max(worst, abs(got - ref) / scale if ref != 0 else abs(got))
        return worst


def _quad(fn, a, b):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(fn, a, b, limit=400, epsabs=1e-13, epsrel=1e-11)
        except (integrate.IntegrationWarning, OverflowError, FloatingPointError) as exc:
            raise NonIntegrableError(f"g k' is not integrable on [{a}, {b}]: {exc}") from None
    if not math.isfinite(val):
        raise NonIntegrableError(f"g k' is not integrable on [{a}, {b}]")
    return val


def _h_by_quadrature(g, kernel, x, upsilon=math.inf):
    def gs(t):
        with np.errstate(over="raise", invalid="raise"):
            return float(g(np.array(t)))

    if isinstance(kernel, IndicatorKernel):
        return float(g(np.array(x))) if x <= upsilon else 0.0
    if isinstance(kernel, ExpConvKernel):
        if x < 0 or x > upsilon:
            return 0.0
        a = kernel.rate
        return _quad(lambda t: gs(t) * math.exp(-a * (t - x)), x, upsilon)
    if isinstance(kernel, TabulatedKernel):
        tg = kernel.t_grid
        total = 0.0
        for t0, t1 in zip(tg[:-1], tg[1:]):
            if t0 >= upsilon:
                break
            t1 = min(t1, upsilon)
            slope = float(kernel.deriv(np.array(t0), np.array(x)))
            if slope != 0.0:
                total += slope * _quad(gs, t0, t1)
        return total
    raise TypeError(f"no quadrature rule for kernel {kernel!r}")


def h_transform(g, kernel, upsilon=math.inf):
    """Attach h(x) = int g(t) k'(t, x) dt (truncated at upsilon) to g."""
    if not isinstance(g, Functional):
        g = Functional.user(g)
    trunc = math.isfinite(upsilon)

    if isinstance(kernel, IndicatorKernel):
        def h(x, g=g):
            x = np.asarray(x, dtype=float)
            out = g(x)
            return np.where(x <= upsilon, out, 0.0) if trunc else out

        bps = g.params if g.form == "indicator_interval" else ()
        return MeanFunctional(g, kernel, h, tuple(bps), g.form != "user", upsilon)

    if isinstance(kernel, ExpConvKernel):
        a = kernel.rate
        ups = upsilon
        if g.form == "identity":
            def h(x):
                x = np.asarray(x, dtype=float)
                base = x / a + 1.0 / a ** 2
                if trunc:
                    inside = (x >= 0) & (x <= ups)
                    tail = np.exp(-a * np.where(inside, ups - x, 0.0)) * (ups / a + 1.0 / a ** 2)
                    return np.where(inside, base - tail, 0.0)
                return np.where(x >= 0, base, 0.0)

            return MeanFunctional(g, kernel, h, (0.0,), True, upsilon)
        if g.form == "constant":
            c = g.params[0]

            def h(x):
                x = np.asarray(x, dtype=float)
                if trunc:
                    return c * kernel.value(ups, x)
                return c * kernel.limit(x)

            return MeanFunctional(g, kernel, h, (0.0,), True, upsilon)
        if g.form == "indicator_interval":
            lo, hi = g.params
            lo_t, hi_t = min(lo, ups), min(hi, ups)

            def h(x):
                x = np.asarray(x, dtype=float)
                # int_lo^hi k'(t, x) dt = k(hi, x) - k(lo, x); k continuous in t
                return kernel.value(hi_t, x) - kernel.value(lo_t, x)

            return MeanFunctional(g, kernel, h, (0.0, lo, hi), True, upsilon)

    def h_user(x):
        x = np.asarray(x, dtype=float)
        flat = [_h_by_quadrature(g, kernel, float(v), upsilon) for v in x.reshape(-1)]
        return np.array(flat).reshape(x.shape)

    bps = tuple(kernel.x_grid) if isinstance(kernel, TabulatedKernel) else (0.0,)
    return MeanFunctional(g, kernel, h_user, bps, False, upsilon)


def linear_combination(terms, kernel, upsilon=math.inf):
    """h_transform of sum_i c_i g_i, assembled from the parts.

    `terms` is a sequence of (c_i, MeanFunctional); the result's g is the
    matching combination of the g_i.
    """
    terms = [(float(c), mf) for c, mf in terms]

    def g(t):
        return sum(c * mf.g(t) for c, mf in terms)

    def h(x):
        return sum(c * mf.h(x) for c, mf in terms)

    bps = tuple(sorted({b for _, mf in terms for b in mf.breakpoints}))
    return MeanFunctional(Functional.user(g), kernel, h, bps,
                          all(mf.closed_form for _, mf in terms), upsilon)


# --------------------------------------------------------------------------
# Validation of the regularity conditions
# --------------------------------------------------------------------------


@dataclass
class CheckResult:
    passed: bool
    detail: str


@dataclass
class ValidationReport:
    checks: dict

    @property
    def ok(self):
        return all(c.passed for c in self.checks.values())

    def lines(self):
        return [f"{name}: {'pass' if c.passed else 'FAIL'} ({c.detail})" for name, c in self.checks.items()]


def _probe_grid(spec, kernel):
    lo, hi = spec.base.span
    x = np.linspace(lo, hi, 41)
    if isinstance(kernel, TabulatedKernel):
        x = np.clip(x, kernel.x_grid[0], kernel.x_grid[-1])
        t = kernel.t_grid
    else:
        width = max(hi - lo, 1.0)
        t = np.linspace(lo - 10 * width, hi + 10 * width, 801)
    return t, x


def validate_spec(spec, kernel, g=None, lambdas=(0.1, 1.0, 10.0)):
    """Check the regularity conditions for (spec, kernel) and, when a mean
    functional is given, existence of its mean.

    Monotonicity and the left limit are probed on a grid; finiteness of
    the denominator uses the gamma-family reduction
    int log(1 + lambda kbar/beta) d(alpha) < inf on a lambda grid.
    """
    checks = {}
    t, x = _probe_grid(spec, kernel)

    try:
        kv = kernel.value(t[:, None], x[None, :])
        kbar = kernel.limit(x)
        mono = bool(np.all(np.diff(kv, axis=0) >= -1e-12))
        below = bool(np.all(kv <= kbar[None, :] + 1e-12))
        left = bool(np.all(np.abs(kv[0]) <= 1e-9))
        checks["I"] = CheckResult(mono and left and below,
                                  f"nondecreasing={mono}, vanishes on the left={left}, bounded by limit={below}")
    except DomainError as exc:
        checks["I"] = CheckResult(False, f"kernel undefined on probe grid: {exc}")

    base = spec.base
    try:
        kbar_fn = kernel.limit
        worst = 0.0
        finite = True
        for lam in lambdas:
            def integrand(z, lam=lam):
                # beta <= 0 gives inf/nan here, which the check reports
                with np.errstate(divide="ignore", invalid="ignore"):
                    return np.log1p(lam * kbar_fn(z) / spec.beta_fn(z))
            val = base.integrate(integrand)
            finite &= math.isfinite(val)
            worst = max(worst, val if math.isfinite(val) else math.inf)
        beta_pos = True
        if base.has_density:
            xs, _ = base.density_rule()
            xs = xs[xs <= spec.upsilon]
            beta_pos = bool(np.all(spec.beta_fn(xs) > 0)) if xs.size else True
        if base.atom_locations.size:
            beta_pos &= bool(np.all(spec.beta_fn(base.atom_locations) > 0))
        checks["II"] = CheckResult(finite and beta_pos,
                                   f"max_lambda int log(1+lambda kbar/beta) dalpha = {worst:.6g}; beta>0 a.e.={beta_pos}")
    except DomainError as exc:
        checks["II"] = CheckResult(False, f"kernel limit undefined on the support: {exc}")

    checks["III"] = CheckResult(base.total_mass > 0,
                                "gamma-family intensity has infinite total mass whenever alpha(R) > 0"
                                f" (alpha(R) = {base.total_mass:g})")

    if g is not None:
        try:
            mf = g if isinstance(g, MeanFunctional) else h_transform(g, kernel)
            worst = 0.0
            for lam in lambdas:
                val = base.integrate(lambda z, lam=lam: np.log1p(lam * np.abs(mf.h(z))),
                                     points=mf.breakpoints)
                if not math.isfinite(val):
                    raise NonIntegrableError("log(1 + lambda |h|) not integrable")
                worst = max(worst, val)
            checks["mean"] = CheckResult(True, f"max_lambda int log(1+lambda|h|) dalpha = {worst:.6g}")
        except (NonIntegrableError, FloatingPointError, OverflowError) as exc:
            checks["mean"] = CheckResult(False, f"h does not exist or is not log-integrable: {exc}")
    return ValidationReport(checks)
