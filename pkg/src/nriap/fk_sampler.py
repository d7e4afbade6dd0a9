"""Ferguson-Klass simulation of (extended) gamma IAP paths and evaluation
of the normalized process along a path.

The intensity exp(-beta(x) v) v^-1 dv alpha(dx) is handled with beta
frozen to a constant on each of `n_bins` equal-width bins covering the
part of the density support below the horizon. Atoms of alpha are not
binned: an atom of mass m at x contributes an exact Gamma(m, beta(x))
increment, which is how the gamma process behaves there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import exp1

from .errors import DegeneratePathError, DomainError, NumericError

N_BINS = 256
_BATCH = 64
_NEWTON_MAXIT = 200


@dataclass(frozen=True)
class JumpPath:
    """One realized trajectory: random jumps in generation (nonincreasing
    size) order plus the fixed-location jumps."""

    random_locations: np.ndarray
    random_sizes: np.ndarray
    fixed_locations: np.ndarray
    fixed_sizes: np.ndarray
    upsilon: float
    threshold: float

    @property
    def locations(self):
        return np.concatenate([self.random_locations, self.fixed_locations])

    @property
    def sizes(self):
        return np.concatenate([self.random_sizes, self.fixed_sizes])

    @property
    def n_jumps(self):
        return self.random_sizes.size + self.fixed_sizes.size

    @property
    def total_mass(self):
        return float(self.random_sizes.sum() + self.fixed_sizes.sum())


class LevyBins:
    """Piecewise-constant-beta form of the continuous intensity."""

    def __init__(self, lefts, rights, masses, betas, base):
        keep = masses > 0
        self.lefts = lefts[keep]
        self.rights = rights[keep]
        self.masses = masses[keep]
        self.betas = betas[keep]
        self.base = base
        if np.any(self.betas <= 0):
            raise DomainError("beta must be positive wherever alpha has mass below the horizon")
        # merged view for the tail mass: equal betas add up
        ub, inv = np.unique(self.betas, return_inverse=True)
        self._beta_u = ub
        self._mass_u = np.bincount(inv, weights=self.masses, minlength=ub.size)
        self.total = float(self.masses.sum())
        self._log_beta_mean = float(np.dot(self._mass_u, np.log(ub))) if ub.size else 0.0

    @classmethod
    def from_spec(cls, spec, n_bins=N_BINS):
        base = spec.base
        if not base.has_density:
            empty = np.zeros(0)
            return cls(empty, empty, empty, empty, base)
        lo, hi = base.support
        hi = min(hi, spec.upsilon)
        if hi <= lo:
            empty = np.zeros(0)
            return cls(empty, empty, empty, empty, base)
        edges = np.linspace(lo, hi, n_bins + 1)
        cdf = np.asarray(base.density_cdf(edges), dtype=float)
        masses = np.diff(cdf)
        mids = 0.5 * (edges[:-1] + edges[1:])
        return cls(edges[:-1], edges[1:], masses, spec.beta_fn(mids).astype(float), base)

    @property
    def mids(self):
        return 0.5 * (self.lefts + self.rights)

    def tilted(self, extra):
        """Same bins with beta_b + extra_b."""
        return LevyBins(self.lefts, self.rights, self.masses, self.betas + extra, self.base)

    @property
    def empty(self):
        return self.masses.size == 0

    def tail_mass(self, v):
        v = np.asarray(v, dtype=float)
        if self.empty:
            return np.zeros(v.shape)
        args = v[..., None] * self._beta_u
        return exp1(args) @ self._mass_u

    def inverse_tail(self, xi):
        """v with tail_mass(v) = xi, elementwise for xi > 0.

        Newton on y = log v. As a function of y the tail mass is convex and
        decreasing, and the small-v asymptote A(-gamma - y) - sum m log beta
        never exceeds it, so starting at the asymptote's root puts every
        iterate left of the solution and the iteration is monotone.
        """
        xi = np.asarray(xi, dtype=float)
        if self.empty:
            raise NumericError("no continuous intensity to invert")
        y = -(xi + self._log_beta_mean) / self.total - np.euler_gamma
        for _ in range(_NEWTON_MAXIT):
            v = np.exp(y)
            args = v[..., None] * self._beta_u
            m = exp1(args) @ self._mass_u
            dm = -(np.exp(-args) @ self._mass_u)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = (m - xi) / dm
            if not np.all(np.isfinite(step)):
                raise NumericError("tail mass inversion lost its bracket")
            y = y - step
            if np.max(np.abs(step)) < 1e-13:
                return np.exp(y)
        raise NumericError("tail mass inversion did not converge")

    def sample_locations(self, sizes, rng):
        """Location of each jump from density prop. to exp(-J beta(x)) alpha(dx)."""
        sizes = np.asarray(sizes, dtype=float)
        if sizes.size == 0:
            return np.zeros(0)
        logw = np.log(self.masses)[None, :] - sizes[:, None] * self.betas[None, :]
        logw -= logw.max(axis=1, keepdims=True)
        w = np.exp(logw)
        cum = np.cumsum(w, axis=1)
        u = rng.uniform(size=sizes.size) * cum[:, -1]
        b = np.minimum((cum < u[:, None]).sum(axis=1), self.masses.size - 1)
        lo_c = np.asarray(self.base.density_cdf(self.lefts[b]), dtype=float)
        q = lo_c + rng.uniform(size=sizes.size) * self.masses[b]
        x = np.asarray(self.base.density_quantile(q), dtype=float)
        return np.clip(x, self.lefts[b], self.rights[b])


def levy_tail_mass(spec, v, n_bins=N_BINS):
    """M(v) = int int_v^inf w^-1 exp(-w beta(x)) dw alpha(dx) for v > 0.

    The density part uses the binned beta; atoms of alpha contribute
    m E1(beta(x) v) exactly.
    """
    v_arr = np.asarray(v, dtype=float)
    if np.any(~(v_arr > 0)):
        raise DomainError("levy_tail_mass needs v > 0")
    bins = LevyBins.from_spec(spec, n_bins)
    out = bins.tail_mass(v_arr)
    base = spec.base
    atoms = base.atom_locations <= spec.upsilon
    if atoms.any():
        b = spec.beta_fn(base.atom_locations[atoms])
        out = out + exp1(v_arr[..., None] * b) @ base.atom_masses[atoms]
    if np.ndim(v) == 0:
        return float(out)
    return out


def _fk_jumps(bins, threshold, rng):
    """Jump sizes in decreasing order until the relative size of the next
    one drops below `threshold`; that jump and all later ones are dropped."""
    if bins.empty:
        return np.zeros(0)
    sizes = []
    xi0 = 0.0
    total = 0.0
    while True:
        xi = xi0 + np.cumsum(rng.standard_exponential(_BATCH))
        xi0 = float(xi[-1])
        j = bins.inverse_tail(xi)
        running = total + np.cumsum(j)
        stop = np.nonzero(j / running < threshold)[0]
        if stop.size:
            sizes.append(j[: stop[0]])
            return np.concatenate(sizes)
        sizes.append(j)
        total = float(running[-1])


def _fixed_part(spec, extra_rate=None):
    """Locations, gamma shapes and rates of the fixed jumps below the horizon:
    the declared fixed jumps plus alpha's atoms."""
    locs, shapes, rates = [], [], []
    for fj in spec.fixed_jumps:
        locs.append(fj.location)
        shapes.append(fj.shape)
        rates.append(fj.rate)
    base = spec.base
    taken = set(locs)
    for x, m in zip(base.atom_locations.tolist(), base.atom_masses.tolist()):
        if x > spec.upsilon:
            continue
        b = float(spec.beta_fn(np.array(x)))
        if x in taken:
            # alpha atom on top of a declared fixed jump: Gamma shapes add
            i = locs.index(x)
            shapes[i] += m
        else:
            locs.append(x)
            shapes.append(m)
            rates.append(b)
    locs = np.array(locs, dtype=float)
    shapes = np.array(shapes, dtype=float)
    rates = np.array(rates, dtype=float)
    if extra_rate is not None and locs.size:
        rates = rates + extra_rate(locs)
    return locs, shapes, rates


def sample_jump_path(spec, threshold=1e-4, rng=None, bins=None):
    """One trajectory of the IAP by the Ferguson-Klass method.

    Sizes are M^{-1}(xi_k) for unit-rate Poisson arrival times xi_k; the
    series stops at the first jump whose size relative to the accumulated
    total (itself included) falls below `threshold`. Fixed jumps do not
    enter the stopping rule.
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    if rng is None:
        rng = np.random.default_rng()
    if bins is None:
        bins = LevyBins.from_spec(spec)
    sizes = _fk_jumps(bins, threshold, rng)
    locs = bins.sample_locations(sizes, rng)
    f_locs, f_shapes, f_rates = _fixed_part(spec)
    f_sizes = rng.gamma(f_shapes, 1.0 / f_rates) if f_locs.size else np.zeros(0)
    return JumpPath(locs, sizes, f_locs, f_sizes, float(spec.upsilon), float(threshold))


def eval_process(path, kernel, t):
    """(Z(t), Zbar, F(t), f(t)) along a path, with Zbar = Z(upsilon).

    `t` may be a scalar or an array; outputs follow its shape.
    """
    x = path.locations
    j = path.sizes
    if j.size == 0:
        raise DegeneratePathError("empty jump path")
    ups = path.upsilon
    if not math.isfinite(ups):
        zbar = float(np.dot(kernel.limit(x), j))
    else:
        zbar = float(np.dot(kernel.value(ups, x), j))
    if not zbar > 0:
        raise DegeneratePathError("path has no mass below the horizon")
    t_arr = np.asarray(t, dtype=float)
    tt = t_arr.reshape(-1)
    z = kernel.value(tt[:, None], x[None, :]) @ j
    dz = kernel.deriv(tt[:, None], x[None, :]) @ j
    if math.isfinite(ups):
        # F is a d.f. on (-inf, upsilon]
        z = np.where(tt >= ups, zbar, z)
        dz = np.where(tt > ups, 0.0, dz)
    z = z.reshape(t_arr.shape)
    dz = dz.reshape(t_arr.shape)
    F = z / zbar
    f = dz / zbar
    if t_arr.ndim == 0:
        return float(z), zbar, float(F), float(f)
    return z, zbar, F, f


def path_mean(path, functional):
    """int g dF along the path, via sum h(x_j) J_j / Zbar with the
    horizon-matched transform h."""
    x = path.locations
    j = path.sizes
    kernel = functional.kernel
    if math.isfinite(path.upsilon):
        if functional.upsilon != path.upsilon:
            raise ValueError("functional must be truncated at the path horizon")
        zbar = float(np.dot(kernel.value(path.upsilon, x), j))
    else:
        zbar = float(np.dot(kernel.limit(x), j))
    if not zbar > 0:
        raise DegeneratePathError("path has no mass below the horizon")
    return float(np.dot(functional.h(x), j)) / zbar
