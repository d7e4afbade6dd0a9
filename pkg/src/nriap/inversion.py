"""Exact laws of means of normalized (extended) gamma driven random d.f.s.

Conventions, fixed by the characteristic function of a gamma process
(and checked against the stick-breaking oracle in the tests):

* For X = int z dGamma with intensity e^{-beta v} v^-1 dv alpha(dx),
  E exp(isX) = exp(-1/2 int log(1 + s^2 z^2/beta^2) dalpha
                   + i int arctan(s z/beta) dalpha),
  so the c.d.f. of a mean carries the factor 1/2 on the log-modulus.
* The density of a Dirichlet mean with base measure alpha* of total mass
  A > 1 is (A - 1)/pi * int_0^inf Re exp(-int log(1 + is(h - sigma)) dalpha*) ds.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import optimize

from .curves import DistCurve
from .errors import DomainError, UnsupportedObservationError
from .measures import IndicatorKernel, MeanFunctional
from .quadrature import integrate_halfline, integrate_logscale
from .tables import CumulativeTable

CDF_ATOL = 1e-10
DENSITY_ATOL = 1e-9
_ROOT_GRID = 2049


def _log1p_sq(w):
    aw = np.abs(w)
    with np.errstate(over="ignore"):
        return np.where(aw > 1e100, 2.0 * np.log(np.maximum(aw, 1e-300)), np.log1p(aw * aw))


def _as_h(h):
    if isinstance(h, MeanFunctional):
        return h.h, tuple(h.breakpoints)
    return h, ()


class _Integrand:
    """The pair (q(x), weight(x)) behind int F(s q(x)) weight(x) alpha(dx),
    with q(x) = (h(x) - sigma c(x)) / beta(x).

    Quadrature nodes are rebuilt for each sigma: the density part of alpha
    is split at kinks and graded toward every root of q, where
    log(1 + s^2 q^2) changes on a 1/s scale.
    """

    def __init__(self, h, alpha, points=(), scale=None, rate=None):
        self.h, bps = _as_h(h)
        self.alpha = alpha
        self.scale = scale  # c(x); None means 1
        self.rate = rate    # beta(x); None means 1
        self.points = tuple(points) + bps
        if alpha.has_density:
            lo, hi = alpha.support
            grid = np.linspace(lo, hi, _ROOT_GRID)
            extra = [p for p in self.points + alpha.kinks if lo < p < hi]
            self._grid = np.unique(np.concatenate([grid, extra]))
            self._hgrid = np.asarray(self.h(self._grid), dtype=float)
            self._cgrid = None if scale is None else np.asarray(scale(self._grid), dtype=float)
        self._atom_h = np.asarray(self.h(alpha.atom_locations), dtype=float) if alpha.atom_locations.size else np.zeros(0)
        self._atom_c = None
        if scale is not None and alpha.atom_locations.size:
            self._atom_c = np.asarray(scale(alpha.atom_locations), dtype=float)

    def ratio_range(self):
        """Range of h/c over the support of alpha (where c > 0)."""
        vals = []
        if self.alpha.has_density:
            c = np.ones_like(self._hgrid) if self._cgrid is None else self._cgrid
            ok = c > 0
            vals.append(self._hgrid[ok] / c[ok])
        if self._atom_h.size:
            c = np.ones_like(self._atom_h) if self._atom_c is None else self._atom_c
            ok = c > 0
            vals.append(self._atom_h[ok] / c[ok])
        vals = np.concatenate(vals) if vals else np.zeros(0)
        return float(vals.min()), float(vals.max())

    def _q_scalar(self, x, sigma):
        hv = float(self.h(np.array(x)))
        cv = 1.0 if self.scale is None else float(self.scale(np.array(x)))
        return hv - sigma * cv

    def roots(self, sigma):
        if not self.alpha.has_density:
            return []
        c = 1.0 if self._cgrid is None else self._cgrid
        q = self._hgrid - sigma * c
        sgn = np.sign(q)
        out = []
        idx = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
        for i in idx[:256]:
            a, b = self._grid[i], self._grid[i + 1]
            try:
                out.append(optimize.brentq(self._q_scalar, a, b, args=(sigma,), xtol=1e-15, rtol=4e-16))
            except ValueError:
                out.append(0.5 * (a + b))
        zeros = np.nonzero(sgn == 0)[0]
        for i in zeros[:64]:
            left = sgn[i - 1] if i > 0 else 0
            right = sgn[i + 1] if i + 1 < sgn.size else 0
            if left != 0 or right != 0:
                out.append(float(self._grid[i]))
        return out

    def nodes(self, sigma):
        """(q, w) at quadrature nodes plus atoms: int F(s q) dalpha ~ sum w F(s q)."""
        qs, ws = [], []
        if self.alpha.has_density:
            x, w = self.alpha.density_rule(points=self.points, singular=self.roots(sigma))
            q = np.asarray(self.h(x), dtype=float)
            if self.scale is not None:
                q = q - sigma * np.asarray(self.scale(x), dtype=float)
            else:
                q = q - sigma
            if self.rate is not None:
                q = q / np.asarray(self.rate(x), dtype=float)
            qs.append(q)
            ws.append(w)
        if self.alpha.atom_locations.size:
            c = 1.0 if self._atom_c is None else self._atom_c
            q = self._atom_h - sigma * c
            if self.rate is not None:
                q = q / np.asarray(self.rate(self.alpha.atom_locations), dtype=float)
            qs.append(q)
            ws.append(self.alpha.atom_masses)
        q = np.concatenate(qs)
        w = np.concatenate(ws)
        keep = (w != 0) & (q != 0)
        return q[keep], w[keep]


def _log_cf(s, q, w):
    """(log modulus, phase) of exp(-int log(1 - i s q) dalpha) at each s."""
    sq = s[:, None] * q[None, :]
    logmod = -0.5 * (_log1p_sq(sq) @ w)
    phase = np.arctan(sq) @ w
    return logmod, phase


def _first_panel(q):
    top = float(np.max(np.abs(q))) if q.size else 1.0
    return 1.0 / max(top, 1e-12)


def _cdf_from_nodes(q, w):
    """P(int q dGamma <= 0) for the gamma process with intensity alpha."""
    if q.size == 0:
        return 0.5, 0.0

    def integrand(s):
        logmod, phase = _log_cf(s, q, w)
        return np.exp(logmod) * np.sin(phase) / s

    val, err = integrate_halfline(integrand, atol=CDF_ATOL, first=_first_panel(q))
    return 0.5 - float(val) / math.pi, err


def _sigma_loop(sigma, fn):
    arr = np.asarray(sigma, dtype=float)
    out = np.array([fn(float(v)) for v in arr.reshape(-1)])
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def prior_mean_cdf_dirichlet(sigma, h, alpha, return_error=False):
    """C.d.f. at sigma of int h dD, D a Dirichlet process with base alpha.

    `h` is a MeanFunctional or a vectorized callable; `sigma` may be an
    array. With `return_error` the largest tail-error estimate is returned
    alongside.
    """
    integ = _Integrand(h, alpha)
    lo, hi = integ.ratio_range()
    errs = [0.0]

    def one(s):
        if s < lo:
            return 0.0
        if s >= hi:
            return 1.0
        q, w = integ.nodes(s)
        val, err = _cdf_from_nodes(q, w)
        errs.append(err)
        return min(1.0, max(0.0, val))

    out = _sigma_loop(sigma, one)
    if return_error:
        return out, max(errs)
    return out


def _levy_transform(levy_density, w):
    """(C, S) = (int (cos(wv) - 1) rho(v) dv, int sin(wv) rho(v) dv).

    [0, 1/w] is integrated directly. Beyond that the oscillating part is
    taken over dyadic intervals with finite-interval Fourier rules, which
    stay reliable however many cycles an interval holds, until the mass
    of rho in an interval is negligible; whatever remains goes to the
    semi-infinite Fourier rule.
    """
    from scipy import integrate

    def quad(*args, **kw):
        return integrate.quad(*args, limit=200, epsabs=1e-15, epsrel=1e-11, **kw)[0]

    cut = 1.0 / w
    # rho's own scale is unknown, so break [0, 1/w] geometrically
    pts = cut * np.geomspace(1e-12, 0.5, 24)
    C = quad(lambda v: (math.cos(w * v) - 1.0) * levy_density(v), 0.0, cut, points=pts)
    S = quad(lambda v: math.sin(w * v) * levy_density(v), 0.0, cut, points=pts)
    def fourier(weight, a, b, depth=0):
        # the finite-interval Fourier rule occasionally returns a wrong
        # value without flagging it; accept only when halves agree
        whole = quad(levy_density, a, b, weight=weight, wvar=w)
        m = 0.5 * (a + b)
        left = quad(levy_density, a, m, weight=weight, wvar=w)
        right = quad(levy_density, m, b, weight=weight, wvar=w)
        if abs(whole - left - right) <= 1e-13 + 1e-10 * abs(whole) or depth >= 6:
            return left + right
        return fourier(weight, a, m, depth + 1) + fourier(weight, m, b, depth + 1)

    lo = cut
    for _ in range(200):
        hi = 2.0 * lo
        mass = quad(levy_density, lo, hi)
        C += fourier("cos", lo, hi) - mass
        S += fourier("sin", lo, hi)
        lo = hi
        if mass < 1e-16:
            break
    else:
        C += integrate.quad(levy_density, lo, np.inf, weight="cos", wvar=w, limlst=200)[0]
        C -= quad(levy_density, lo, np.inf)
        S += integrate.quad(levy_density, lo, np.inf, weight="sin", wvar=w, limlst=200)[0]
    return C, S


def _homogeneous_levy_tables(levy_density, n=801, w_lo=1e-8, w_hi=1e12):
    """Interpolation tables of the v-transforms of a Levy density rho(v)
    that does not depend on x.

    Cubic splines in log|w| on [w_lo, w_hi]. Below w_lo the first-order
    behaviour C ~ w^2, S ~ w is used; above w_hi C continues linearly in
    log w (the logarithmic growth of an infinite-activity density) and S
    is held constant.
    """
    from scipy.integrate import IntegrationWarning
    from scipy.interpolate import CubicSpline

    ws = np.geomspace(w_lo, w_hi, n)
    with warnings.catch_warnings():
        # roundoff notices on intervals where rho is already ~1e-16
        warnings.simplefilter("ignore", IntegrationWarning)
        vals = np.array([_levy_transform(levy_density, w) for w in ws])
    logw = np.log(ws)
    c_spl = CubicSpline(logw, vals[:, 0])
    s_spl = CubicSpline(logw, vals[:, 1])
    c_slope = (vals[-1, 0] - vals[-2, 0]) / (logw[-1] - logw[-2])

    def lookup(wq):
        aw = np.abs(wq)
        lw = np.log(np.clip(aw, w_lo, w_hi))
        c = c_spl(lw)
        s = s_spl(lw)
        small = aw < w_lo
        c = np.where(small, vals[0, 0] * (aw / w_lo) ** 2, c)
        s = np.where(small, vals[0, 1] * aw / w_lo, s)
        big = aw > w_hi
        c = np.where(big, vals[-1, 0] + c_slope * (np.log(np.maximum(aw, w_hi)) - logw[-1]), c)
        return c, np.sign(wq) * s

    return lookup


def _general_integrand(h, kernel, base, rate=None):
    hfun, bps = _as_h(h)
    ups = h.upsilon if isinstance(h, MeanFunctional) else math.inf
    if math.isfinite(ups):
        def scale(x):
            return kernel.value(ups, np.asarray(x, dtype=float))
        points = tuple(bps) + (ups,)
    else:
        scale = kernel.limit
        points = tuple(bps)
    if not isinstance(kernel, IndicatorKernel):
        points = points + (0.0,)
    return _Integrand(hfun, base, points=points, scale=scale, rate=rate)


def mean_range(h, base, kernel=None):
    """(lo, hi) bracketing every value the random mean can take: the range
    of h over the support of `base`, or of h divided by the normaliser
    (kbar, or k(upsilon, .) for a truncated h) when a kernel is given."""
    if kernel is None:
        return _Integrand(h, base).ratio_range()
    return _general_integrand(h, kernel, base).ratio_range()


def prior_mean_cdf_general(sigma, h, kernel, spec, levy_density=None, return_error=False):
    """Symmetrized c.d.f. (F(sigma) + F(sigma-))/2 of int g dF for a
    normalized IAP driven random d.f.

    Default intensity is the extended gamma one from `spec`, whose
    v-integrals are done in closed form. A homogeneous user intensity
    rho(v) dv alpha(dx) may be supplied as `levy_density`; its v-integrals
    are tabulated numerically (beta is then ignored).

    When h is horizon-truncated (finite h.upsilon) the normaliser is
    k(upsilon, x) rather than the limit kbar(x), giving the law for
    F(t) = Z(t)/Z(upsilon).
    """
    rate = None if (levy_density is not None or (spec.beta_is_constant and float(spec.beta) == 1.0)) else spec.beta_fn
    integ = _general_integrand(h, kernel, spec.base, rate)
    lo, hi = integ.ratio_range()
    lookup = _homogeneous_levy_tables(levy_density) if levy_density is not None else None
    errs = [0.0]

    def one(s):
        if s < lo:
            return 0.0
        if s > hi:
            return 1.0
        q, w = integ.nodes(s)
        if q.size == 0:
            return 0.5
        if lookup is None:
            def integrand(sv):
                sq = sv[:, None] * q[None, :]
                # v-integrals of the gamma intensity in closed form
                return np.exp(-0.5 * (_log1p_sq(sq) @ w)) * np.sin(np.arctan(sq) @ w) / sv
        else:
            def integrand(sv):
                c, si = lookup(sv[:, None] * q[None, :])
                return np.exp(c @ w) * np.sin(si @ w) / sv

        v, err = integrate_logscale(integrand, 1e-12 * _first_panel(q), atol=CDF_ATOL)
        val = 0.5 - float(v) / math.pi
        errs.append(err)
        return val

    out = _sigma_loop(sigma, one)
    if return_error:
        return out, max(errs)
    return out


def mdp_functional(mf, base):
    """Prop-3 style reduction of a mean of an MDP to a Dirichlet mean: the
    MeanFunctional with h replaced by h/kbar, provided kbar is a positive
    constant on the support of `base`."""
    kernel = mf.kernel
    pts = []
    if base.has_density:
        pts.append(np.linspace(*base.support, 257))
    if base.atom_locations.size:
        pts.append(base.atom_locations)
    kb = kernel.limit(np.concatenate(pts))
    if not (np.all(kb > 0) and np.ptp(kb) <= 1e-12 * kb.max()):
        raise DomainError("kernel limit is not a positive constant on the support; not an MDP")
    b = 1.0 / float(kb[0])
    hfun = mf.h
    return MeanFunctional(mf.g, kernel, lambda x: b * hfun(x), mf.breakpoints, mf.closed_form, mf.upsilon)


# --------------------------------------------------------------------------
# Posterior laws
# --------------------------------------------------------------------------


def _density_integral(q, w, extra=None, total_mass=None):
    """(A - 1)/pi int_0^inf Re exp(-int log(1 + i s q) dalpha*) ds.

    `extra(s)` returns additional (logmod, phase) terms of shape
    (batch, len(s)) for batched latent configurations.
    """
    def integrand(s):
        logmod, phase = _log_cf(s, q, w)
        if extra is not None:
            lm, ph = extra(s)
            logmod = logmod[None, :] + lm
            phase = phase[None, :] + ph
        return np.exp(logmod) * np.cos(phase)

    first = _first_panel(q)
    val, err = integrate_halfline(integrand, atol=DENSITY_ATOL, first=first)
    return (total_mass - 1.0) / math.pi * val, err


def posterior_mean_density_latent(sigma, h, alpha, u, counts=None):
    """Density at sigma of int h dD given latent points u (each with unit
    multiplicity unless `counts` says otherwise), D ~ DP(alpha + sum delta_u).

    Needs alpha(R) + len(u) > 1 for the integral to converge.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    counts = np.ones_like(u) if counts is None else np.asarray(counts, dtype=float)
    total = alpha.total_mass + counts.sum()
    if total <= 1.0:
        raise DomainError("latent density formula needs total mass > 1")
    integ = _Integrand(h, alpha)
    lo, hi = integ.ratio_range()
    hfun, _ = _as_h(h)
    hu = np.asarray(hfun(u), dtype=float) if u.size else np.zeros(0)
    if hu.size:
        lo, hi = min(lo, hu.min()), max(hi, hu.max())

    def one(s):
        if s <= lo or s >= hi:
            return 0.0
        q, w = integ.nodes(s)
        q = np.concatenate([q, hu - s])
        w = np.concatenate([w, counts])
        keep = q != 0
        if w[keep].sum() <= 1.0:
            # |phi(s)| ~ s^-(mass off the level set): not integrable
            return math.inf
        val, _ = _density_integral(q[keep], w[keep], total_mass=total)
        return max(float(val), 0.0)

    return _sigma_loop(sigma, one)


class LatentUrn:
    """Sequential sampler for latents given observations: u_k is drawn from
    k'(t_k, u) (alpha + sum_{i<k} delta_{u_i})(du), and the log of the
    product of the per-step normalizers is the importance log-weight."""

    def __init__(self, t, kernel, alpha):
        if not kernel.absolutely_continuous:
            raise DomainError("latent sampling needs an absolutely continuous kernel")
        self.t = np.asarray(t, dtype=float).reshape(-1)
        self.kernel = kernel
        self.alpha = alpha
        self._tables = []
        self._atom_w = []
        for tk in self.t:
            table = None
            if alpha.has_density:
                lo, hi = alpha.support
                bps = [b for b in kernel.breakpoints(tk) if lo < b < hi]

                def f(x, tk=tk):
                    return kernel.deriv(tk, x) * alpha.density(x)

                table = CumulativeTable(f, lo, hi, breaks=bps, cells=512)
            self._tables.append(table)
            aw = kernel.deriv(tk, alpha.atom_locations) * alpha.atom_masses if alpha.atom_locations.size else np.zeros(0)
            self._atom_w.append(np.asarray(aw, dtype=float))

    def draw(self, rng):
        n = self.t.size
        u = np.empty(n)
        logw = 0.0
        for k in range(n):
            tk = self.t[k]
            table = self._tables[k]
            dens_mass = table.total if table is not None else 0.0
            aw = self._atom_w[k]
            prev_w = self.kernel.deriv(tk, u[:k]) if k else np.zeros(0)
            c = dens_mass + aw.sum() + prev_w.sum()
            if not c > 0:
                raise UnsupportedObservationError(f"observation {tk:g} has zero likelihood under every latent")
            logw += math.log(c)
            r = rng.uniform() * c
            if r < dens_mass:
                u[k] = float(table.quantile(np.array(r)))
                continue
            r -= dens_mass
            pool_w = np.concatenate([aw, prev_w])
            pool_x = np.concatenate([self.alpha.atom_locations, u[:k]])
            idx = int(np.searchsorted(np.cumsum(pool_w), r, side="right"))
            u[k] = pool_x[min(idx, pool_x.size - 1)]
        return u, logw


def sample_latents_urn(t, kernel, alpha, rng):
    """One draw (u, log_weight) from the Polya-urn latent proposal."""
    return LatentUrn(t, kernel, alpha).draw(rng)


def _prior_density_fd(grid, h, alpha, rel_step=1e-4):
    integ = _Integrand(h, alpha)
    lo, hi = integ.ratio_range()
    d = rel_step * (hi - lo)
    up = prior_mean_cdf_dirichlet(grid + d, h, alpha)
    dn = prior_mean_cdf_dirichlet(grid - d, h, alpha)
    return (up - dn) / (2 * d)


def posterior_mean_density_mixture(grid, h, alpha, t, kernel, draws, rng):
    """Posterior density of int h dD given data t, as a self-normalized
    importance average of latent-conditional densities over urn draws.

    `h` must already be the Dirichlet-scale functional (see
    mdp_functional). With no data this is the prior density, obtained by
    differencing the prior c.d.f.
    """
    grid = np.asarray(grid, dtype=float)
    t = np.asarray(t, dtype=float).reshape(-1)
    if draws < 1:
        raise ValueError("draws must be >= 1")
    if t.size == 0:
        vals = _prior_density_fd(grid, h, alpha)
        return DistCurve(grid, vals, "density", meta={"method": "prior-fd"})

    urn = LatentUrn(t, kernel, alpha)
    lat = []
    logw = np.empty(draws)
    for d in range(draws):
        u, lw = urn.draw(rng)
        lat.append(u)
        logw[d] = lw
    lat = np.array(lat)
    wts = np.exp(logw - logw.max())
    wts /= wts.sum()
    ess = 1.0 / float(np.sum(wts ** 2))

    hfun, _ = _as_h(h)
    hlat = np.asarray(hfun(lat), dtype=float)  # (draws, n)
    total = alpha.total_mass + t.size
    integ = _Integrand(h, alpha)
    lo, hi = integ.ratio_range()
    dens = np.zeros((draws, grid.size))
    worst = 0.0
    for j, sg in enumerate(grid):
        if sg <= lo or sg >= hi:
            continue
        q, w = integ.nodes(sg)
        z = hlat - sg

        def extra(s, z=z):
            sz = s[None, None, :] * z[:, :, None]
            return -0.5 * _log1p_sq(sz).sum(axis=1), -np.arctan(sz).sum(axis=1)

        # alpha part enters with the opposite phase sign to the latent terms
        # in _log_cf; flip it through q -> -q
        val, err = _density_integral(-q, w, extra=extra, total_mass=total)
        dens[:, j] = np.maximum(val, 0.0)
        worst = max(worst, err)
    est = wts @ dens
    se = np.sqrt(np.sum(wts[:, None] ** 2 * (dens - est[None, :]) ** 2, axis=0))
    meta = {"ess": ess, "draws": draws, "method": "mixture"}
    if ess < 10:
        meta["warning"] = "effective sample size below 10"
    return DistCurve(grid, est, "density", quad_tol=worst, stderr=se, meta=meta)


def _subset_sizes(n):
    return np.array([bin(m).count("1") for m in range(1 << n)])


def _partition_sum(cell_vals, n):
    """sum over set partitions P of {0..n-1} of prod_{C in P} cell_vals[C],
    for cell_vals indexed by bitmask (last axis broadcast)."""
    full = (1 << n) - 1
    T = {0: np.ones_like(cell_vals[1])}
    for U in range(1, full + 1):
        low = U & -U
        rest = U ^ low
        acc = 0
        sub = rest
        while True:
            C = sub | low
            acc = acc + cell_vals[C] * T[U ^ C]
            if sub == 0:
                break
            sub = (sub - 1) & rest
        T[U] = acc
    return T[full]


def posterior_mean_density_exact_smalln(grid, h, alpha, t, kernel):
    """Exact posterior density of int h dD given n <= 10 observations,
    summing over set partitions of the latents.

    A partition with cells C_i contributes prod (c_i - 1)! times the
    latent-conditional density with all of C_i's latents at one point
    u_i, integrated against prod_{p in C_i} k'(t_p, u_i) alpha(du_i). The
    density is linear in the characteristic-function factor, so the cell
    integrals are taken inside the s-integral, where they factor.
    """
    grid = np.asarray(grid, dtype=float)
    t = np.asarray(t, dtype=float).reshape(-1)
    n = t.size
    if not 1 <= n <= 10:
        raise ValueError("exact posterior density supports 1 <= n <= 10")
    if not kernel.absolutely_continuous:
        raise DomainError("exact posterior density needs an absolutely continuous kernel")
    hfun, bps = _as_h(h)
    sizes = _subset_sizes(n)
    fact = np.array([math.factorial(max(c - 1, 0)) for c in sizes], dtype=float)
    bpts = set(bps)
    for tk in t:
        bpts.update(kernel.breakpoints(tk))
    total = alpha.total_mass + n
    integ = _Integrand(h, alpha, points=tuple(sorted(bpts)))
    lo, hi = integ.ratio_range()

    def cell_nodes(sg):
        xs, ws = [], []
        if alpha.has_density:
            x, w = alpha.density_rule(points=tuple(sorted(bpts)), singular=integ.roots(sg))
            xs.append(x)
            ws.append(w)
        if alpha.atom_locations.size:
            xs.append(alpha.atom_locations)
            ws.append(alpha.atom_masses)
        x = np.concatenate(xs)
        w = np.concatenate(ws)
        kd = kernel.deriv(t[:, None], x[None, :])  # (n, Q)
        K = np.ones((1 << n, x.size))
        for m in range(1, 1 << n):
            low = (m & -m).bit_length() - 1
            K[m] = K[m & (m - 1)] * kd[low]
        return x, w, K

    # denominator: partition sum at s = 0
    x0, w0, K0 = cell_nodes(grid[len(grid) // 2])
    I0 = (K0 * w0[None, :]).sum(axis=1) * fact
    denom = float(_partition_sum(I0, n))
    if not denom > 0:
        raise UnsupportedObservationError("data have zero likelihood under the model")

    vals = np.zeros(grid.size)
    worst = 0.0
    for j, sg in enumerate(grid):
        if sg <= lo or sg >= hi:
            continue
        q, w = integ.nodes(sg)
        x, wc, K = cell_nodes(sg)
        z = np.asarray(hfun(x), dtype=float) - sg
        KW = K * wc[None, :]

        def integrand(s, q=q, w=w, z=z, KW=KW):
            logmod, phase = _log_cf(s, q, w)
            base = np.exp(logmod - 1j * phase)  # exp(-int log(1 + i s q) dalpha)
            P = 1.0 / (1.0 + 1j * s[:, None] * z[None, :])  # (S, Q)
            powers = [np.ones_like(P)]
            for _ in range(n):
                powers.append(powers[-1] * P)
            cells = np.empty((1 << n, s.size), dtype=complex)
            cells[0] = 1.0
            for m in range(1, 1 << n):
                cells[m] = fact[m] * (powers[sizes[m]] @ KW[m])
            return (base * _partition_sum(cells, n)).real

        val, err = integrate_halfline(integrand, atol=DENSITY_ATOL * denom, first=_first_panel(q))
        vals[j] = max((total - 1.0) / math.pi * float(val) / denom, 0.0)
        worst = max(worst, err / denom)
    return DistCurve(grid, vals, "density", quad_tol=worst,
                     meta={"method": "exact", "partitions_denominator": denom})


def law_mean(cdf_fn, lo, hi, order=256):
    """E X from a c.d.f. supported in [lo, hi]: lo + int_lo^hi (1 - F)."""
    from .quadrature import panel_rule

    x, w = panel_rule(np.linspace(lo, hi, 5), order // 4)
    return float(lo + np.dot(w, 1.0 - np.asarray(cdf_fn(x))))
