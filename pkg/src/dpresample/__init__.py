"""Differentially private nonparametric confidence intervals via subsampling."""

__version__ = "0.1.0"

from .accountant import (
    BASIC,
    CompositionMode,
    PrivSubBudget,
    amplify,
    calibrate,
    compose_advanced,
    compose_basic,
    privsub_total,
)
from .baselines import (
    BootstrapPlan,
    SplitPlan,
    bootstrap_ci,
    bootstrap_replicates,
    expmech_median_ci,
    median_rank_bounds,
    sample_splitting_ci,
)
from .distributions import (
    Dataset,
    DistributionSpec,
    TruncatedExponential,
    TruncatedMixture,
    TruncatedNormal,
    cdf,
    density_at,
    distribution_label,
    limiting_cdf_median,
    limiting_stddev_median,
    sample,
    true_mean,
    true_median,
    true_quantile,
)
from .harness import (
    CdfReport,
    CdfRow,
    CoverageReport,
    CoverageRow,
    build_interval,
    merge_reports,
    read_coverage_csv,
    run_cdf_convergence,
    run_coverage,
    write_cdf_csv,
    write_cdf_grid_csv,
    write_coverage_csv,
    write_csv,
)
from .config import ExperimentConfig, MethodModel, subsample_size_two_thirds
from .mechanisms import (
    BoundedRange,
    PrivacyBudget,
    gaussian_mean,
    gaussian_noise_sigma,
    global_sensitivity_mean,
    inverse_sensitivity_median,
    laplace_mean,
    mean,
    median,
    median_piece_decomposition,
    path_length_median,
    sample_laplace,
)
from .subsampling import (
    ConfidenceInterval,
    EmpiricalCdf,
    EstimateSet,
    SubsamplingPlan,
    SubsamplingResult,
    cdf_eval,
    cdf_quantile,
    ci_from_estimates,
    draw_subsample,
    empirical_cdf,
    quantile_indices,
    run_nonprivate_subsampling,
    run_privsub,
)
