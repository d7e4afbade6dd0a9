"""Latent-variable Gibbs sampler for a normalized extended gamma IAP
random d.f. given positive observations.

Each observation t_i carries a location s_i (a jump of the driving
process below t_i) and a scale u_i > 0. One sweep:

1. redraw the process given (s, u): a Ferguson-Klass draw under the
   tilted rate beta(x) + k(upsilon, x) U with U = sum(u), plus gamma
   jumps at the distinct latent locations and at the prior fixed jumps;
2. redraw every s_i among the current jumps below t_i with weights
   J k'(t_i, x);
3. redraw every u_i as an exponential with rate Zbar = sum k(upsilon, x) J.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, DegeneratePathError, DomainError
from .fk_sampler import JumpPath, LevyBins, _fixed_part, _fk_jumps, eval_process, path_mean
from .measures import Functional, IapSpec, MeanFunctional, h_transform

MAX_STEP1_RETRIES = 10
DEFAULT_UPSILON_FACTOR = 1.5


@dataclass
class GibbsConfig:
    iterations: int = 10_000
    burn_in: int = 1_000
    threshold: float = 1e-4
    upsilon: float | None = None
    seed: int = 0
    sigma_grid: np.ndarray | None = None
    t_grid: np.ndarray | None = None

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError("iterations must be at least 1")
        if not 0 <= self.burn_in < self.iterations:
            raise ConfigError("burn_in must satisfy 0 <= burn_in < iterations")
        if not 0 < self.threshold < 1:
            raise ConfigError("threshold must lie in (0, 1)")
        if self.upsilon is not None and not self.upsilon > 0:
            raise ConfigError("upsilon must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        for name in ("sigma_grid", "t_grid"):
            grid = getattr(self, name)
            if grid is not None:
                grid = np.asarray(grid, dtype=float)
                if grid.ndim != 1 or (grid.size > 1 and np.any(np.diff(grid) <= 0)):
                    raise ConfigError(f"{name} must be strictly increasing")
                setattr(self, name, grid)

    def resolve_upsilon(self, data):
        if self.upsilon is not None:
            return float(self.upsilon)
        if len(data) == 0:
            raise ConfigError("upsilon must be given when there are no observations")
        return DEFAULT_UPSILON_FACTOR * float(np.max(data))


@dataclass
class GibbsState:
    s: np.ndarray
    u: np.ndarray
    path: JumpPath | None = None
    iter: int = 0

    def check(self, t):
        """Raise AssertionError if a state invariant is broken."""
        assert np.all(self.u > 0), "latent scales must be positive"
        assert np.all(self.s < t), "latent locations must precede their observations"
        if self.path is not None and self.s.size:
            assert np.all(np.isin(self.s, self.path.locations)), "latents must sit on jumps"


def check_data(t):
    t = np.asarray(t, dtype=float).reshape(-1)
    if not np.all(np.isfinite(t)):
        raise DataError("observations must be finite")
    if np.any(t <= 0):
        raise DataError("observations must be positive")
    return t


def init_state(t, rng):
    """u_i ~ Gamma(1, 1) and s_i ~ U(0, t_i); the path is filled by the
    first process update."""
    t = check_data(t)
    u = rng.gamma(1.0, 1.0, size=t.size)
    s = rng.uniform(0.0, 1.0, size=t.size) * t
    return GibbsState(s=s, u=u)


@dataclass
class ChainContext:
    """Quantities fixed for the whole run: the horizon-restricted spec,
    the untilted bins and k(upsilon, .) on the bin midpoints."""

    spec: IapSpec
    kernel: object
    bins: LevyBins
    k_mids: np.ndarray
    threshold: float = 1e-4

    @classmethod
    def build(cls, spec, kernel, upsilon, threshold=1e-4):
        if not kernel.absolutely_continuous:
            raise DomainError("the Gibbs sampler needs an absolutely continuous kernel")
        fixed = tuple(fj for fj in spec.fixed_jumps if fj.location <= upsilon)
        spec = IapSpec(spec.base, spec.beta, fixed, upsilon)
        bins = LevyBins.from_spec(spec)
        k_mids = np.asarray(kernel.value(upsilon, bins.mids), dtype=float)
        return cls(spec, kernel, bins, k_mids, float(threshold))

    def k_ups(self, x):
        return np.asarray(self.kernel.value(self.spec.upsilon, np.asarray(x, dtype=float)), dtype=float)


def posterior_fixed_jumps(ctx, s, u):
    """Gamma (shape, rate) of every fixed jump of the process given latents.

    Distinct latent locations with multiplicity r get shape r added to any
    prior fixed jump (declared or an atom of alpha) already there, or a new
    Gamma(r, beta(s) + k(upsilon, s) U) jump otherwise. All rates gain
    k(upsilon, x) U.
    """
    U = float(np.sum(u))
    locs, shapes, rates = _fixed_part(ctx.spec)
    prior = {float(x): i for i, x in enumerate(locs)}
    shapes = shapes.copy()
    new_locs, new_counts = [], []
    if s.size:
        distinct, counts = np.unique(s, return_counts=True)
        for x, r in zip(distinct.tolist(), counts.tolist()):
            if x in prior:
                shapes[prior[x]] += r
            else:
                new_locs.append(x)
                new_counts.append(float(r))
    new_locs = np.array(new_locs, dtype=float)
    all_locs = np.concatenate([locs, new_locs])
    all_shapes = np.concatenate([shapes, np.array(new_counts, dtype=float)])
    all_rates = np.concatenate([rates, ctx.spec.beta_fn(new_locs)])
    all_rates = all_rates + ctx.k_ups(all_locs) * U
    return all_locs, all_shapes, all_rates


def step_update_process(state, ctx, rng):
    """Draw the driving process given the latents."""
    U = float(np.sum(state.u))
    bins = ctx.bins.tilted(ctx.k_mids * U) if U > 0 else ctx.bins
    sizes = _fk_jumps(bins, ctx.threshold, rng)
    locs = bins.sample_locations(sizes, rng)
    f_locs, f_shapes, f_rates = posterior_fixed_jumps(ctx, state.s, state.u)
    f_sizes = rng.gamma(f_shapes, 1.0 / f_rates) if f_locs.size else np.zeros(0)
    return JumpPath(locs, sizes, f_locs, f_sizes, float(ctx.spec.upsilon), ctx.threshold)


def location_weights(path, kernel, t):
    """Matrix of J k'(t_i, x) over jumps x < t_i (rows: observations)."""
    x = path.locations
    j = path.sizes
    t = np.asarray(t, dtype=float)
    w = np.asarray(kernel.deriv(t[:, None], x[None, :]), dtype=float) * j[None, :]
    return np.where(x[None, :] < t[:, None], w, 0.0)


def step_update_s(state, kernel, t, rng):
    """Each s_i drawn among the jumps below t_i. Raises DegeneratePathError
    if some observation has no admissible jump."""
    if state.s.size == 0:
        return state.s
    w = location_weights(state.path, kernel, t)
    cum = np.cumsum(w, axis=1)
    tot = cum[:, -1] if cum.shape[1] else np.zeros(w.shape[0])
    if np.any(~(tot > 0)):
        raise DegeneratePathError("no jump with positive weight below some observation")
    r = rng.uniform(size=t.size) * tot
    idx = np.minimum((cum <= r[:, None]).sum(axis=1), w.shape[1] - 1)
    return state.path.locations[idx]


def zbar(path, kernel):
    return float(np.dot(kernel.value(path.upsilon, path.locations), path.sizes))


def step_update_u(state, kernel, rng):
    """u_i i.i.d. exponential with rate Zbar."""
    z = zbar(state.path, kernel)
    if not z > 0:
        raise DegeneratePathError("Zbar is zero")
    return rng.exponential(1.0 / z, size=state.u.size)


@dataclass
class PosteriorSummary:
    """Kept draws of a chain (or merged chains) and the statistics built
    from them."""

    t_grid: np.ndarray
    F: np.ndarray
    f: np.ndarray
    means: np.ndarray
    upsilon: float
    trace: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def n_kept(self):
        return self.means.size

    @property
    def F_mean(self):
        return self.F.mean(axis=0)

    @property
    def f_mean(self):
        return self.f.mean(axis=0)

    @property
    def F_se(self):
        return batch_means_se(self.F)

    @property
    def expected_mean(self):
        """Posterior expected value of the mean functional."""
        return float(self.means.mean())

    @property
    def expected_mean_se(self):
        return float(batch_means_se(self.means))

    def mean_histogram(self, sigma_grid):
        """Density histogram of the mean-functional draws with bin edges
        `sigma_grid`; returns (midpoints, density)."""
        edges = np.asarray(sigma_grid, dtype=float)
        dens, _ = np.histogram(self.means, bins=edges, density=True)
        return 0.5 * (edges[:-1] + edges[1:]), dens

    def merge(self, other):
        if not np.array_equal(self.t_grid, other.t_grid) or self.upsilon != other.upsilon:
            raise ValueError("summaries must share t_grid and upsilon")
        trace = {k: np.concatenate([self.trace[k], other.trace[k]]) for k in self.trace}
        return PosteriorSummary(
            self.t_grid,
            np.concatenate([self.F, other.F]),
            np.concatenate([self.f, other.f]),
            np.concatenate([self.means, other.means]),
            self.upsilon,
            trace,
            self.seconds + other.seconds,
        )


def batch_means_se(x, batches=50):
    """Standard error of the mean of a (possibly autocorrelated) series
    along axis 0, by non-overlapping batch means."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n < 2 * batches:
        return x.std(axis=0, ddof=1) / math.sqrt(n)
    size = n // batches
    bm = x[: size * batches].reshape(batches, size, *x.shape[1:]).mean(axis=1)
    return bm.std(axis=0, ddof=1) / math.sqrt(batches)


def _functional_for(g, kernel, upsilon):
    if isinstance(g, MeanFunctional):
        if g.upsilon == upsilon and g.kernel is kernel:
            return g
        g = g.g
    if not isinstance(g, Functional):
        raise ConfigError("g must be a Functional or MeanFunctional")
    return h_transform(g, kernel, upsilon)


def run_chain(config, data, spec, kernel, g=None, callback=None):
    """Run the sampler and return a PosteriorSummary of the kept sweeps.

    `g` defaults to the identity functional. With no data each sweep is
    an independent prior draw.
    """
    t = check_data(data) if len(data) else np.zeros(0)
    ups = config.resolve_upsilon(t)
    if t.size and np.any(t > ups):
        raise ConfigError("upsilon must not be smaller than the largest observation")
    ctx = ChainContext.build(spec, kernel, ups, config.threshold)
    mf = _functional_for(Functional.identity() if g is None else g, kernel, ups)
    t_grid = config.t_grid if config.t_grid is not None else np.linspace(0.0, ups, 101)

    rng = np.random.default_rng(int(config.seed))
    state = init_state(t, rng) if t.size else GibbsState(np.zeros(0), np.zeros(0))
    kept = config.iterations - config.burn_in
    F = np.empty((kept, t_grid.size))
    f = np.empty((kept, t_grid.size))
    means = np.empty(kept)
    trace = {k: np.empty(config.iterations) for k in ("n_jumps", "zbar", "u_sum", "mean")}
    start = time.perf_counter()
    for it in range(config.iterations):
        for attempt in range(MAX_STEP1_RETRIES):
            state.path = step_update_process(state, ctx, rng)
            try:
                state.s = step_update_s(state, kernel, t, rng)
                break
            except DegeneratePathError:
                if attempt == MAX_STEP1_RETRIES - 1:
                    raise
        if t.size:
            state.u = step_update_u(state, kernel, rng)
        state.iter = it + 1
        m = path_mean(state.path, mf)
        trace["n_jumps"][it] = state.path.n_jumps
        trace["zbar"][it] = zbar(state.path, kernel)
        trace["u_sum"][it] = state.u.sum()
        trace["mean"][it] = m
        if it >= config.burn_in:
            k = it - config.burn_in
            _, _, F[k], f[k] = eval_process(state.path, kernel, t_grid)
            means[k] = m
        if callback is not None:
            callback(state)
    return PosteriorSummary(t_grid, F, f, means, ups, trace, time.perf_counter() - start)
