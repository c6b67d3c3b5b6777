"""Information bounds, rank statistics and LAN Monte Carlo experiments for
structured Gaussian copula models."""

from .corrmodels import (
    CorrelationModel,
    correlation,
    domain_check,
    gradient,
    precision,
    symmetry_condition,
)
from .errors import (
    CopulaBoundsError,
    DataError,
    DefinitenessError,
    DomainError,
    NotAvailableError,
)
from .estimators import (
    BenchReport,
    EstimateResult,
    NormalScoresCorrelation,
    OneStepEfficientEstimator,
    estimator_benchmark,
    moment_start,
    normal_scores_correlation,
    one_step_efficient,
)
from .infobounds import (
    BoundCurve,
    EfficientInfo,
    InfoDecomposition,
    bound_curve,
    closed_form_info,
    cross_info_equal,
    cross_info_unequal,
    decompose,
    efficient_info,
    info_theta,
    psi_info_unequal,
)
from .lanlab import (
    AMatrixStack,
    LLRSample,
    LocalPerturbation,
    McReport,
    QuadStats,
    a_matrices,
    contraction,
    h_vector,
    lambda_hat,
    lambda_y,
    loglik,
    mc_lan_experiment,
    perturbation,
    quad_diff_stats,
)
from .sampling import (
    MarginSpec,
    apply_margins,
    column_ranks,
    inv_norm_cdf,
    normal_scores,
    replicate_seed,
    sample_gaussian,
)

__version__ = "0.1.0"

__all__ = [
    "AMatrixStack",
    "BenchReport",
    "BoundCurve",
    "CopulaBoundsError",
    "CorrelationModel",
    "DataError",
    "DefinitenessError",
    "DomainError",
    "EfficientInfo",
    "EstimateResult",
    "InfoDecomposition",
    "LLRSample",
    "LocalPerturbation",
    "MarginSpec",
    "McReport",
    "NormalScoresCorrelation",
    "NotAvailableError",
    "OneStepEfficientEstimator",
    "QuadStats",
    "a_matrices",
    "apply_margins",
    "bound_curve",
    "closed_form_info",
    "column_ranks",
    "contraction",
    "correlation",
    "cross_info_equal",
    "cross_info_unequal",
    "decompose",
    "domain_check",
    "efficient_info",
    "estimator_benchmark",
    "gradient",
    "h_vector",
    "info_theta",
    "inv_norm_cdf",
    "lambda_hat",
    "lambda_y",
    "loglik",
    "mc_lan_experiment",
    "moment_start",
    "normal_scores",
    "normal_scores_correlation",
    "one_step_efficient",
    "perturbation",
    "precision",
    "psi_info_unequal",
    "quad_diff_stats",
    "replicate_seed",
    "sample_gaussian",
    "symmetry_condition",
]
