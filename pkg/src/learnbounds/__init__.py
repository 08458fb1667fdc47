"""Learnability bounds for analytic targets, power-series kernels, and the
k-body force-learning benchmark that exercises both."""

from .series import (
    AuxSeries,
    BivariateSeries,
    BoundReport,
    BOUND_RULES,
    DivergenceError,
    UnlearnableTermError,
    bivariate_chain_bound,
    chain_bound,
    gaussian_schedule,
    kernel_weighted_bound,
    monomial_bound,
    multivariate_bound,
    plain_relu_schedule,
    power_law_schedule,
    product_bound,
    univariate_bound,
)
from .gravity_bound import (
    CrossCheck,
    TaylorApprox,
    binomial_series_coefficients,
    gravity_bound_crosscheck,
    gravity_bound_log,
    gravity_degree,
    inverse_cube_taylor,
    kernel_penalty_log,
)
from .kernels import (
    CoefficientPrefix,
    CoefficientsUnavailableError,
    DotProductKernel,
    GaussianSphereKernel,
    ModifiedReLUKernel,
    MonteCarloKernel,
    SlowDecayKernel,
    gaussian_eval,
    input_lift,
    mc_kernel_estimate,
    mc_kernel_estimate_detail,
    modified_relu_angle_coefficients,
    modified_relu_coefficients,
    modified_relu_eval,
    nngp_reference,
    nngp_reference_pair,
    slow_decay_eval,
)
from .gravity_data import (
    DatasetFormatError,
    GeometryError,
    GravityInstance,
    GravityParams,
    RescaleResult,
    SingularityError,
    force,
    instances_to_arrays,
    mix_seed,
    read_dataset,
    rescale_instance,
    sample_dataset,
    sample_instance,
    splitmix64,
    write_dataset,
    write_metadata,
)
from .regression import (
    FeatureMap,
    FitResult,
    GramSystem,
    IllConditionedError,
    RandomFeatureModel,
    SingularGramError,
    complexity,
    feature_map,
    fit_random_feature_model,
    fit_top_layer,
    gen_bound,
    gradient_descent_fit,
    gram,
    normalized_rmse,
    predict,
    random_features,
    rmse,
    solve_min_norm,
)
from .cli import SweepConfig, run_sweep

__version__ = "0.1.0"
