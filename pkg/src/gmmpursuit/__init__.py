"""Projection pursuit on Gaussian mixture densities.

Fit a mixture to data, then search for the low dimensional orthonormal
projection whose marginal density is least Gaussian, scored by fast
negentropy approximations and validated against Monte Carlo.
"""

from .data import (
    Dataset,
    Preprocessor,
    apply_preprocessor,
    fit_preprocessor,
    invert_preprocessor,
    load_csv,
    save_csv,
    simulate_triangle,
    simulate_waveform,
    waveform_templates,
)
from .errors import DataError, FitError, GmmPursuitError, NumericalError
from .ga import (
    GAConfig,
    PursuitResult,
    crossover_local_arithmetic,
    fitness,
    local_search,
    mutate_uniform,
    run_pursuit,
    select_parents,
)
from .gmm import (
    ALL_MODELS,
    CovarianceModel,
    FitReport,
    GaussianMixture,
    GridEntry,
    InitStrategy,
    bic_value,
    em_fit,
    fit_grid,
    gradient_density,
    log_density,
    mixture_moments,
    model_from_json,
    model_to_json,
    n_params,
    responsibilities,
    sample,
    select_model,
)
from .metrics import (
    ComparisonReport,
    compare_estimators,
    mc_negentropy_of_basis,
    relative_accuracy,
    screen_features,
    subspace_distance,
)
from .negentropy import (
    EstimatorKind,
    NegentropyEstimate,
    entropy_mc,
    entropy_sote,
    entropy_ut,
    entropy_var,
    gaussian_entropy,
    hessian_logf,
    kl_gaussian,
    negentropy,
    sigma_points,
)
from .projection import (
    AngleGenome,
    Basis,
    decode,
    encode_basis,
    genome_bounds,
    load_basis_csv,
    load_genome_csv,
    orthonormalize,
    pca_basis,
    project_data,
    project_mixture,
    random_genome,
    save_basis_csv,
    save_genome_csv,
)
from .svgplot import histogram_svg, scatter_svg

__version__ = "0.1.0"

__all__ = [
    "ALL_MODELS",
    "AngleGenome",
    "Basis",
    "ComparisonReport",
    "CovarianceModel",
    "DataError",
    "Dataset",
    "EstimatorKind",
    "FitError",
    "FitReport",
    "GAConfig",
    "GaussianMixture",
    "GmmPursuitError",
    "GridEntry",
    "InitStrategy",
    "NegentropyEstimate",
    "NumericalError",
    "Preprocessor",
    "PursuitResult",
    "apply_preprocessor",
    "bic_value",
    "compare_estimators",
    "crossover_local_arithmetic",
    "decode",
    "em_fit",
    "encode_basis",
    "entropy_mc",
    "entropy_sote",
    "entropy_ut",
    "entropy_var",
    "fit_grid",
    "fit_preprocessor",
    "fitness",
    "gaussian_entropy",
    "genome_bounds",
    "gradient_density",
    "hessian_logf",
    "histogram_svg",
    "invert_preprocessor",
    "kl_gaussian",
    "load_basis_csv",
    "load_csv",
    "load_genome_csv",
    "local_search",
    "log_density",
    "mc_negentropy_of_basis",
    "mixture_moments",
    "model_from_json",
    "model_to_json",
    "mutate_uniform",
    "n_params",
    "negentropy",
    "orthonormalize",
    "pca_basis",
    "project_data",
    "project_mixture",
    "random_genome",
    "relative_accuracy",
    "responsibilities",
    "run_pursuit",
    "sample",
    "save_basis_csv",
    "save_csv",
    "save_genome_csv",
    "scatter_svg",
    "screen_features",
    "select_model",
    "select_parents",
    "sigma_points",
    "simulate_triangle",
    "simulate_waveform",
    "subspace_distance",
    "waveform_templates",
]
