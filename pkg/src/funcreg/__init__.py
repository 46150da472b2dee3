"""Estimation of linear functionals of the slope in functional linear
regression: weight-sequence rate theory, a thresholded projection estimator,
synthetic data generation, and a Monte Carlo rate-certification harness."""

from .basis import (
    CoeffVector,
    RepresenterSpec,
    TailRule,
    eval_basis,
    linear_functional,
    representer_coeffs,
    synth_slope,
    weighted_norm_sq,
)
from .estimator import (
    ConsistencyReport,
    EstimateReport,
    EstimatorConfig,
    consistency_diagnostics,
    empirical_cov,
    empirical_g,
    inverse_spectral_norm,
    plug_in_estimate,
    plug_in_from_moments,
    threshold_alpha,
)
from .experiments import (
    AlphaPolicy,
    SlopeSpec,
    StudyConfig,
    StudyResult,
    lower_bound_value,
    mc_mse,
    rate_study,
    representer_class_bound,
    worst_case_representer,
)
from .galerkin import BiasBound, GalerkinSolution, bias_report, galerkin_solve, solve_spd
from .rates import (
    DeltaStarResult,
    KappaResult,
    KStarResult,
    RateOrder,
    RatesProfile,
    compute_delta_star,
    compute_delta_star_class,
    compute_kappa,
    compute_kstar,
    rate_exponent_catalog,
    rates_profile,
)
from .simulate import CovarianceModel, Dataset, derive_rng, sample_dataset, sample_regressor
from .weights import ModelRegularity, WeightSpec

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
