"""Deterministic-equivalent Z-scores for compound Wishart models.

The package computes the mean and variance of trace powers of compound
Wishart matrices from a genus expansion over signed-permutation premaps,
standardizes observed trace powers into Z-scores, and applies the resulting
test to batched samples of 2D moving-average / ARMA lattice models.
"""

__version__ = "0.1.0"

from .arma2d import (
    ARMAKernelPair,
    DataShape,
    KernelFormatError,
    MAKernel,
    arma_to_ma,
    extended_dims,
    format_kernel,
    is_reversible,
    load_kernel_file,
    ma_filter_matrix,
    ma_to_wishart,
    norm_ratio_bound,
    parse_kernel_text,
    sample_ma_data,
    save_kernel_file,
)
from .fde import (
    FdeStatistics,
    cumulant_bound,
    cycle_moment_product,
    fde_mean,
    fde_statistics,
    fde_variance,
    fde_zscore,
    genus_cumulant,
    mean_coefficients,
    norm_ratio,
    variance_coefficients,
)
from .gof import (
    TestReport,
    decision,
    empirical_trace_moments,
    hypothesis_to_ma,
    kernel_distance,
    run_test,
    zscores,
)
from .permu import (
    Premap,
    SetPartition,
    SignedPermutation,
    block_perm,
    compose,
    cumulants_from_moments,
    enumerate_partitions,
    enumerate_premaps,
    euler_char,
    is_premap,
    join_is_full,
    moments_from_cumulants,
    negation,
    particular_part,
    premap_count,
    signed_lifts,
)
from .wishart import (
    CompoundWishartParam,
    RngStream,
    matrix_moments,
    sample,
    spectral_norm,
    trace_power,
)
