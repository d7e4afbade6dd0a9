"""Laws of means of normalized increasing additive process random
distribution functions: exact inversion formulas, Ferguson-Klass path
simulation, a latent-variable Gibbs sampler and brute-force oracles."""

from .curves import DistCurve
from .errors import (
    ConfigError,
    DataError,
    DegeneratePathError,
    DomainError,
    NonIntegrableError,
    NriapError,
    NumericError,
    ToleranceError,
    UnsupportedObservationError,
)
from .fk_sampler import JumpPath, eval_process, levy_tail_mass, path_mean, sample_jump_path
from .gibbs import GibbsConfig, GibbsState, PosteriorSummary, init_state, run_chain
from .inversion import (
    law_mean,
    mdp_functional,
    mean_range,
    posterior_mean_density_exact_smalln,
    posterior_mean_density_latent,
    posterior_mean_density_mixture,
    prior_mean_cdf_dirichlet,
    prior_mean_cdf_general,
    sample_latents_urn,
)
from .measures import (
    BaseMeasure,
    ExpConvKernel,
    FixedJump,
    Functional,
    IapSpec,
    IndicatorKernel,
    MeanFunctional,
    TabulatedKernel,
    h_transform,
    linear_combination,
    validate_spec,
)
from .oracle import DiscreteMeasure, enumerate_partitions, mc_mean_cdf, stick_breaking_dp

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "DegeneratePathError",
    "DomainError",
    "NonIntegrableError",
    "NriapError",
    "NumericError",
    "ToleranceError",
    "UnsupportedObservationError",
    "law_mean",
    "mdp_functional",
    "mean_range",
    "posterior_mean_density_exact_smalln",
    "posterior_mean_density_latent",
    "posterior_mean_density_mixture",
    "prior_mean_cdf_dirichlet",
    "prior_mean_cdf_general",
    "sample_latents_urn",
    "BaseMeasure",
    "ExpConvKernel",
    "FixedJump",
    "Functional",
    "IapSpec",
    "IndicatorKernel",
    "MeanFunctional",
    "TabulatedKernel",
    "h_transform",
    "linear_combination",
    "validate_spec",
    "DistCurve",
    "JumpPath",
    "eval_process",
    "levy_tail_mass",
    "path_mean",
    "sample_jump_path",
    "GibbsConfig",
    "GibbsState",
    "PosteriorSummary",
    "init_state",
    "run_chain",
    "DiscreteMeasure",
    "enumerate_partitions",
    "mc_mean_cdf",
    "stick_breaking_dp",
]
