"""Covariate-shift classification via discriminative density-ratio estimation.

Direct density-ratio estimation (uLSIF) with a soft-matching extension, an
iterative class-wise reweighting procedure stopped by a mutual-information
criterion, importance-weighted probabilistic classifiers, and a multi-seed
experiment harness for synthetic and biased-sampling benchmark studies.
"""

from ddrshift.classifiers import (
    GnbModel,
    WlspcModel,
    fit_weighted_gnb,
    fit_wlspc,
    iwcv_select,
    predict_posterior,
)
from ddrshift.data import (
    BiasedSplit,
    Dataset,
    biased_split,
    choose_bias_vector,
    gen_two_class_four_cluster,
    load_csv,
    load_sparse_text,
    normalize_minmax,
    selection_probabilities,
)
from ddrshift.ddr import (
    DdrConfig,
    DdrResult,
    IterationRecord,
    combine_weights,
    ddr_fit,
    estimate_prior_ratio,
    fit_classwise_ratios,
    mutual_information,
)
from ddrshift.density_ratio import (
    DEFAULT_LAMBDA_GRID,
    RatioModel,
    default_sigma_grid,
    evaluate_ratio,
    fit_soft_ulsif,
    fit_ulsif,
    sample_centers,
    select_hyperparams,
)
from ddrshift.experiments import (
    ConfigError,
    ExperimentConfig,
    ExperimentReport,
    run_biased,
    run_experiment,
    run_synthetic,
    welch_t_test,
)
from ddrshift.kernels import (
    gaussian_kernel,
    kernel_matrix,
    median_heuristic,
    weighted_kernel,
)

__version__ = "0.1.0"
