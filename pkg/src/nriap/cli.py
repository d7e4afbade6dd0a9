"""Command-line interface.

Every command reads an optional flat ``key = value`` config file (dotted
keys, ``#`` comments), writes CSV/text artifacts to ``--out`` and exits
with 0 on success, 2 on a configuration error, 3 on a data error and 4
when a numerical tolerance could not be met. Failures print exactly one
line to stderr of the form ``error kind=<kind> message=<text>``.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import gibbs, inversion, oracle
from .errors import ConfigError, DataError, DomainError, NriapError, NumericError
from .measures import (
    BaseMeasure,
    ExpConvKernel,
    Functional,
    IapSpec,
    IndicatorKernel,
    h_transform,
    validate_spec,
)

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

# key -> parser; anything else in a config file is rejected
_KEYS = {
    "seed": int,
    "upsilon": float,
    "alpha.kind": str,
    "alpha.lo": float,
    "alpha.hi": float,
    "alpha.mass": float,
    "alpha.locations": str,
    "alpha.masses": str,
    "alpha.file": str,
    "beta": float,
    "beta.file": str,
    "kernel.family": str,
    "kernel.rate": float,
    "functional.kind": str,
    "functional.lo": float,
    "functional.hi": float,
    "functional.file": str,
    "gibbs.iterations": int,
    "gibbs.burn_in": int,
    "fk.threshold": float,
    "grid.sigma": str,
    "grid.t": str,
    "oracle.samples": int,
    "mixture.draws": int,
    "prior.method": str,
}

_DEFAULTS = {
    "seed": 0,
    "alpha.kind": "uniform",
    "alpha.lo": 0.0,
    "alpha.hi": 1.0,
    "beta": 1.0,
    "kernel.family": "indicator",
    "kernel.rate": 1.0,
    "functional.kind": "identity",
    "gibbs.iterations": 10_000,
    "gibbs.burn_in": 1_000,
    "fk.threshold": 1e-4,
    "oracle.samples": 100_000,
    "mixture.draws": 2_000,
    "prior.method": "auto",
}


# --------------------------------------------------------------------------
# Files
# --------------------------------------------------------------------------


def parse_config_text(text):
    """Parse ``key = value`` lines into a dict of typed values."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            out[key] = _KEYS[key](value)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from None
    return out


def load_config(path):
    cfg = dict(_DEFAULTS)
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        cfg.update(parse_config_text(text))
    for key, least in (("oracle.samples", 1000), ("mixture.draws", 1), ("gibbs.iterations", 1)):
        if cfg[key] < least:
            raise ConfigError(f"{key} must be at least {least}")
    return cfg


def read_data(path):
    """One positive real per line; blank lines and '#' comments skipped.

    A single-column CSV written by this tool is accepted too: a leading
    line holding a bare column name is taken as its header.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DataError(f"cannot read data {path}: {exc.strerror}") from None
    vals = []
    seen_header = False
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            v = float(line)
        except ValueError:
            if not vals and not seen_header and line.isidentifier():
                seen_header = True
                continue
            raise DataError(f"{path}:{lineno}: not a number: {line!r}") from None
        if not (math.isfinite(v) and v > 0):
            raise DataError(f"{path}:{lineno}: observations must be positive and finite")
        vals.append(v)
    return np.array(vals)


def format_number(v):
    return f"{v:.9g}"


def write_csv(path, header, columns):
    """Columns of equal length under a header row, 9 significant digits."""
    cols = [np.asarray(c, dtype=float) for c in columns]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(format_number(v) for v in row) + "\n")


def read_csv(path):
    """Inverse of write_csv: (header, 2-D array of rows)."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DataError(f"{path}: empty file")
    header = lines[0].split(",")
    try:
        rows = [[float(v) for v in ln.split(",")] for ln in lines[1:] if ln.strip()]
    except ValueError:
        raise DataError(f"{path}: non-numeric entry") from None
    if any(len(r) != len(header) for r in rows):
        raise DataError(f"{path}: ragged rows")
    return header, np.array(rows, dtype=float).reshape(len(rows), len(header))


def write_summary(path, items):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in items:
            if isinstance(value, float):
                value = format_number(value)
            fh.write(f"{key}={value}\n")


# --------------------------------------------------------------------------
# Config -> model objects
# --------------------------------------------------------------------------


def _floats(text, key):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{key} must be a comma-separated list of numbers") from None


def _table(path, key, ncols=2):
    try:
        header, rows = read_csv(path)
    except OSError as exc:
        raise ConfigError(f"cannot read {key} {path}: {exc.strerror}") from None
    except DataError as exc:
        raise ConfigError(str(exc)) from None
    if rows.shape[1] != ncols or rows.shape[0] < 2:
        raise ConfigError(f"{key} needs {ncols} columns and at least two rows")
    if np.any(np.diff(rows[:, 0]) <= 0):
        raise ConfigError(f"{key}: first column must be strictly increasing")
    return rows


def parse_grid(text, key):
    """'lo:hi:n' (inclusive linspace) or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"{key} must look like lo:hi:n")
        try:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ConfigError(f"{key} must look like lo:hi:n") from None
        if n < 2 or not hi > lo:
            raise ConfigError(f"{key} needs hi > lo and n >= 2")
        grid = np.linspace(lo, hi, n)
    else:
        grid = np.array(_floats(text, key))
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ConfigError(f"{key} must be strictly increasing")
    return grid


def build_alpha(cfg):
    kind = cfg["alpha.kind"]
    if kind == "uniform":
        lo, hi = cfg["alpha.lo"], cfg["alpha.hi"]
        mass = cfg.get("alpha.mass", hi - lo)
        if not hi > lo:
            raise ConfigError("alpha.hi must exceed alpha.lo")
        if not mass > 0:
            raise ConfigError("alpha.mass must be positive")
        return BaseMeasure.uniform(lo, hi, mass)
    if kind == "atoms":
        locs = _floats(cfg.get("alpha.locations", ""), "alpha.locations")
        masses = _floats(cfg.get("alpha.masses", ""), "alpha.masses")
        if not locs or len(locs) != len(masses):
            raise ConfigError("alpha.locations and alpha.masses must be non-empty and equally long")
        if min(masses) <= 0:
            raise ConfigError("alpha.masses must be positive")
        return BaseMeasure.from_atoms(locs, masses)
    if kind == "tabulated":
        if "alpha.file" not in cfg:
            raise ConfigError("alpha.kind = tabulated needs alpha.file")
        rows = _table(cfg["alpha.file"], "alpha.file")
        if np.any(rows[:, 1] < 0):
            raise ConfigError("alpha.file: density must be nonnegative")
        alpha = BaseMeasure.tabulated(rows[:, 0], rows[:, 1])
        if "alpha.mass" in cfg:
            raise ConfigError("alpha.mass is implied by alpha.file")
        return alpha
    raise ConfigError(f"unknown alpha.kind {kind!r}")


def build_kernel(cfg):
    fam = cfg["kernel.family"]
    if fam == "exp_conv":
        if not cfg["kernel.rate"] > 0:
            raise ConfigError("kernel.rate must be positive")
        return ExpConvKernel(cfg["kernel.rate"])
    if fam == "indicator":
        return IndicatorKernel()
    raise ConfigError(f"unknown kernel.family {fam!r}")


def build_spec(cfg, alpha):
    if "beta.file" in cfg:
        rows = _table(cfg["beta.file"], "beta.file")
        if np.any(rows[:, 1] <= 0):
            raise ConfigError("beta.file: beta must be positive")
        xs, bs = rows[:, 0].copy(), rows[:, 1].copy()

        def beta(x):
            return np.interp(x, xs, bs)
    else:
        beta = cfg["beta"]
        if not beta > 0:
            raise ConfigError("beta must be positive")
    ups = cfg.get("upsilon", math.inf)
    if not ups > 0:
        raise ConfigError("upsilon must be positive")
    return IapSpec(alpha, beta, (), ups)


def build_functional(cfg):
    kind = cfg["functional.kind"]
    if kind == "identity":
        return Functional.identity()
    if kind == "indicator":
        if "functional.lo" not in cfg or "functional.hi" not in cfg:
            raise ConfigError("functional.kind = indicator needs functional.lo and functional.hi")
        if not cfg["functional.hi"] > cfg["functional.lo"]:
            raise ConfigError("functional.hi must exceed functional.lo")
        return Functional.indicator(cfg["functional.lo"], cfg["functional.hi"])
    if kind == "tabulated":
        if "functional.file" not in cfg:
            raise ConfigError("functional.kind = tabulated needs functional.file")
        rows = _table(cfg["functional.file"], "functional.file")
        xs, gs = rows[:, 0].copy(), rows[:, 1].copy()
        return Functional.user(lambda t: np.interp(t, xs, gs, left=gs[0], right=gs[-1]))
    raise ConfigError(f"unknown functional.kind {kind!r}")


@dataclass
class Model:
    alpha: BaseMeasure
    kernel: object
    spec: IapSpec
    g: Functional

    @classmethod
    def from_config(cls, cfg):
        alpha = build_alpha(cfg)
        return cls(alpha, build_kernel(cfg), build_spec(cfg, alpha), build_functional(cfg))

    def dirichlet_h(self):
        """h for the Dirichlet-side computations: h_transform of g, rescaled
        by 1/kbar when the kernel is a convolution (the MDP reduction)."""
        mf = h_transform(self.g, self.kernel)
        if isinstance(self.kernel, IndicatorKernel):
            return mf
        return inversion.mdp_functional(mf, self.alpha)


def _sigma_grid(cfg, h, alpha, kernel=None, n=201):
    if "grid.sigma" in cfg:
        return parse_grid(cfg["grid.sigma"], "grid.sigma")
    lo, hi = inversion.mean_range(h, alpha, kernel)
    if hi <= lo:
        return np.array([lo])
    return np.linspace(lo, hi, n)


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_validate(args, cfg, out):
    m = Model.from_config(cfg)
    report = validate_spec(m.spec, m.kernel, m.g)
    lines = report.lines()
    with open(os.path.join(out, "validate.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    _say(args, "\n".join(lines))
    if not report.ok:
        raise ConfigError("process specification failed validation")


def cmd_prior_cdf(args, cfg, out):
    m = Model.from_config(cfg)
    method = cfg["prior.method"]
    if method == "auto":
        method = "dirichlet" if (m.spec.beta_is_constant and not math.isfinite(m.spec.upsilon)) else "general"
    if method == "dirichlet":
        h = m.dirichlet_h()
        grid = _sigma_grid(cfg, h, m.alpha)
        vals, err = inversion.prior_mean_cdf_dirichlet(grid, h, m.alpha, return_error=True)
    elif method == "general":
        h = h_transform(m.g, m.kernel, m.spec.upsilon)
        grid = _sigma_grid(cfg, h, m.alpha, m.kernel)
        vals, err = inversion.prior_mean_cdf_general(grid, h, m.kernel, m.spec, return_error=True)
    else:
        raise ConfigError(f"unknown prior.method {method!r}")
    write_csv(os.path.join(out, "prior_cdf.csv"), ["sigma", "cdf"], [grid, vals])
    mean = inversion.law_mean(
        lambda s: inversion.prior_mean_cdf_dirichlet(s, h, m.alpha) if method == "dirichlet"
        else inversion.prior_mean_cdf_general(s, h, m.kernel, m.spec),
        grid[0], grid[-1], order=64) if grid.size > 1 else float(grid[0])
    write_summary(os.path.join(out, "prior_summary.txt"),
                  [("method", method), ("expected_mean", mean), ("quad_error", float(err))])
    _say(args, f"prior expected mean {format_number(mean)} ({method})")


def cmd_posterior_density(args, cfg, out):
    if args.data is None:
        raise ConfigError("posterior-density needs --data")
    t = read_data(args.data)
    if t.size == 0:
        raise DataError("no observations in data file")
    m = Model.from_config(cfg)
    h = m.dirichlet_h()
    grid = _sigma_grid(cfg, h, m.alpha)
    if args.exact:
        if t.size > 10:
            raise ConfigError("--exact supports at most 10 observations")
        curve = inversion.posterior_mean_density_exact_smalln(grid, h, m.alpha, t, m.kernel)
        write_csv(os.path.join(out, "posterior_density.csv"), ["sigma", "density"], [grid, curve.values])
    else:
        rng = np.random.default_rng(cfg["seed"])
        curve = inversion.posterior_mean_density_mixture(grid, h, m.alpha, t, m.kernel, cfg["mixture.draws"], rng)
        write_csv(os.path.join(out, "posterior_density.csv"), ["sigma", "density", "stderr"],
                  [grid, curve.values, curve.stderr])
    items = [("method", "exact" if args.exact else "mixture"), ("n", int(t.size)),
             ("integral", curve.integral()), ("expected_mean", curve.mean()),
             ("quad_error", float(curve.quad_tol))]
    if "ess" in curve.meta:
        items.append(("ess", float(curve.meta["ess"])))
    if curve.meta.get("warning"):
        items.append(("warning", curve.meta["warning"]))
    write_summary(os.path.join(out, "posterior_summary.txt"), items)
    _say(args, f"posterior density integrates to {format_number(curve.integral())}")


def _gibbs_config(cfg, upsilon=None):
    t_grid = parse_grid(cfg["grid.t"], "grid.t") if "grid.t" in cfg else None
    ups = upsilon if upsilon is not None else cfg.get("upsilon")
    return gibbs.GibbsConfig(
        iterations=cfg["gibbs.iterations"], burn_in=cfg["gibbs.burn_in"],
        threshold=cfg["fk.threshold"], upsilon=ups, seed=cfg["seed"], t_grid=t_grid,
    )


def _write_chain(out, summary, prefix=""):
    tr = summary.trace
    write_csv(os.path.join(out, prefix + "trace.csv"),
              ["iteration", "n_jumps", "zbar", "u_sum", "mean"],
              [np.arange(1, tr["mean"].size + 1), tr["n_jumps"], tr["zbar"], tr["u_sum"], tr["mean"]])
    write_csv(os.path.join(out, prefix + "curves.csv"), ["t", "F_mean", "F_se", "f_mean"],
              [summary.t_grid, summary.F_mean, summary.F_se, summary.f_mean])


def cmd_gibbs(args, cfg, out):
    t = read_data(args.data) if args.data is not None else np.zeros(0)
    m = Model.from_config(cfg)
    if isinstance(m.kernel, IndicatorKernel):
        raise ConfigError("gibbs needs kernel.family = exp_conv")
    conf = _gibbs_config(cfg)
    summary = gibbs.run_chain(conf, t, m.spec, m.kernel, m.g)
    _write_chain(out, summary)
    write_summary(os.path.join(out, "gibbs_summary.txt"), [
        ("n", int(t.size)), ("upsilon", summary.upsilon), ("kept", summary.n_kept),
        ("expected_mean", summary.expected_mean), ("expected_mean_se", summary.expected_mean_se),
    ])
    _say(args, f"posterior expected mean {format_number(summary.expected_mean)}"
               f" (se {format_number(summary.expected_mean_se)}, {summary.seconds:.1f} s)")


def cmd_oracle(args, cfg, out):
    m = Model.from_config(cfg)
    alpha = m.alpha
    if args.data is not None:
        # posterior oracle given latent locations: alpha + sum of unit atoms
        u = read_data(args.data)
        alpha = alpha.with_atoms(u)
    h = m.dirichlet_h()
    grid = _sigma_grid(cfg, h, alpha)
    rng = np.random.default_rng(cfg["seed"])
    curve = oracle.mc_mean_cdf(alpha, h, cfg["oracle.samples"], grid, rng)
    write_csv(os.path.join(out, "oracle_cdf.csv"), ["sigma", "cdf", "stderr"], [grid, curve.values, curve.stderr])
    write_summary(os.path.join(out, "oracle_summary.txt"), [
        ("samples", cfg["oracle.samples"]), ("expected_mean", curve.meta["mean"]),
        ("expected_mean_se", curve.meta["mean_se"]),
    ])
    _say(args, f"oracle expected mean {format_number(curve.meta['mean'])}")


EXAMPLE_N = 100
EXAMPLE_TRUNCATED_UPSILON = 5.0


def example_model():
    """Uniform base measure on [0, 5] with mass 5, beta = 1, exponential
    convolution kernel with rate 2 and the identity functional."""
    alpha = BaseMeasure.uniform(0.0, 5.0, 5.0)
    return Model(alpha, ExpConvKernel(2.0), IapSpec(alpha, 1.0), Functional.identity())


def cmd_replicate_example(args, cfg, out):
    m = example_model()
    rng = np.random.default_rng(cfg["seed"])
    t = rng.gamma(1.0, 1.0, size=EXAMPLE_N)
    write_csv(os.path.join(out, "data.csv"), ["t"], [t])

    # prior law of the mean through the Dirichlet reduction (h = x + 1/rate)
    h = m.dirichlet_h()
    lo, hi = inversion.mean_range(h, m.alpha)
    grid = _sigma_grid(cfg, h, m.alpha)
    prior_cdf = inversion.prior_mean_cdf_dirichlet(grid, h, m.alpha)
    write_csv(os.path.join(out, "prior_cdf.csv"), ["sigma", "cdf"], [grid, prior_cdf])
    prior_mean = inversion.law_mean(lambda s: inversion.prior_mean_cdf_dirichlet(s, h, m.alpha), lo, hi)

    # the same prior observed only up to a finite horizon
    ups = EXAMPLE_TRUNCATED_UPSILON
    h_trunc = h_transform(m.g, m.kernel, ups)
    tlo, thi = inversion.mean_range(h_trunc, m.alpha, m.kernel)
    spec_trunc = m.spec.with_upsilon(ups)
    prior_mean_trunc = inversion.law_mean(
        lambda s: inversion.prior_mean_cdf_general(s, h_trunc, m.kernel, spec_trunc), tlo, thi, order=64)

    conf = _gibbs_config(cfg, cfg.get("upsilon"))
    summary = gibbs.run_chain(conf, t, m.spec, m.kernel, m.g)
    _write_chain(out, summary, prefix="posterior_")
    edges = np.linspace(0.0, max(3.0, float(summary.means.max()) * 1.01), 121)
    mids, dens = summary.mean_histogram(edges)
    write_csv(os.path.join(out, "posterior_mean_hist.csv"), ["sigma", "density"], [mids, dens])
    items = [
        ("n", EXAMPLE_N),
        ("data_mean", float(t.mean())),
        ("upsilon", summary.upsilon),
        ("iterations", conf.iterations),
        ("burn_in", conf.burn_in),
        # int (x + 1/rate) alpha(dx) / alpha total mass
        ("prior_expected_mean_analytic", m.alpha.integrate(lambda x: x + 1.0 / m.kernel.rate) / m.alpha.total_mass),
        ("prior_expected_mean", prior_mean),
        ("prior_expected_mean_upsilon5", prior_mean_trunc),
        ("posterior_expected_mean", summary.expected_mean),
        ("posterior_expected_mean_se", summary.expected_mean_se),
    ]
    write_summary(os.path.join(out, "summary.txt"), items)
    for key, value in items:
        _say(args, f"{key}={format_number(value) if isinstance(value, float) else value}")


_COMMANDS = {
    "validate": cmd_validate,
    "prior-cdf": cmd_prior_cdf,
    "posterior-density": cmd_posterior_density,
    "gibbs": cmd_gibbs,
    "oracle": cmd_oracle,
    "replicate-example": cmd_replicate_example,
}


def _say(args, text):
    if not args.quiet:
        print(text)


def _seed(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError("seed must be an integer") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


class _ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Turns usage errors into an exception so they exit like config errors."""

    def error(self, message):
        raise _ArgError(message)


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--data", help="observations, one positive number per line")
    common.add_argument("--out", default=".", help="output directory (created if missing)")
    common.add_argument("--seed", type=_seed, help="overrides the config seed")
    common.add_argument("--quiet", action="store_true", help="no progress output")
    parser = _Parser(prog="nriap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "posterior-density":
            mode = p.add_mutually_exclusive_group()
            mode.add_argument("--exact", action="store_true", help="partition-sum density (n <= 10)")
            mode.add_argument("--mixture", action="store_true", help="importance-sampled mixture (default)")
    return parser


def _fail(kind, message, code):
    message = " ".join(str(message).split())
    print(f"error kind={kind} message={message}", file=sys.stderr)
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _ArgError as exc:
        return _fail("config", exc, EXIT_CONFIG)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        os.makedirs(args.out, exist_ok=True)
        _COMMANDS[args.command](args, cfg, args.out)
    except (ConfigError, DomainError) as exc:
        return _fail("config", exc, EXIT_CONFIG)
    except DataError as exc:
        return _fail("data", exc, EXIT_DATA)
    except (NumericError, NriapError) as exc:
        return _fail("numeric", exc, EXIT_NUMERIC)
    except ValueError as exc:
        # argument checks inside the library surface as plain ValueError
        return _fail("config", exc, EXIT_CONFIG)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
