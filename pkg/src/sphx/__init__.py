"""Sparse binary codes for similarity search.

Unit vectors are mapped through a seeded random projection (dense Gaussian
or sign-flip + DCT structured) and thresholded into sparse supports that
index and query like text terms. The analysis module supplies the exact
overlap statistics (mu, sigma, error bands, normal-approximation bounds)
and the simulate/evaluate modules verify the retrieval guarantees
numerically.
"""

from .analysis import (
    ErrorBand,
    PhaseRegion,
    ScoreStats,
    epsilon_asymptotic,
    error_band,
    expected_sparsity,
    mu,
    mu_asymptotic,
    mu_sigma,
    normal_approx_bound,
    normal_tail,
    phase_region,
    retrieval_probability,
    solve_epsilons,
    tabulate,
    threshold_h,
)
from .corpus import RawCorpus, histogram_bin, load_vectors, save_vectors, window_series
from .embedding import (
    ProjectionVector,
    SparseCode,
    Transform,
    TransformKind,
    UnitVector,
    apply_transform,
    dct2,
    encode,
    make_transform,
    map_vector,
    overlap,
    score,
)
from .evaluate import (
    Band,
    PRPoint,
    count_error_events,
    judge,
    pr_auc,
    pr_curve,
    precision_recall,
)
from .index import (
    IndexConfig,
    InvertedIndex,
    NearestNeighbor,
    SearchResult,
    ThresholdLambda,
    TopK,
    build_index,
    export_tokens,
    index_stats,
    load_index,
    parse_tokens,
    save_index,
    search,
)
from .simulate import (
    ExperimentMode,
    ExperimentSpec,
    pair_with_inner_product,
    run_cdf_experiment,
    run_domination_experiment,
    run_error_experiment,
    run_phase_experiment,
    run_sparsity_experiment,
)

__version__ = "0.1.0"
