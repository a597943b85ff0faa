"""fdyson: simulation and statistical verification of the eigenvalue process
of symmetric (and Hermitian) matrix fractional Brownian motion."""

from .errors import (
    AssumptionViolated,
    ConfigInvalid,
    DimensionMismatch,
    EmbeddingNotPSD,
    EmptySample,
    FactorizationFailure,
    FdysonError,
    GapBelowTolerance,
    GridMismatch,
    InsufficientData,
    NoConvergence,
    NonSymmetricOffset,
    NotVeryGood,
    OrderingViolated,
    QTooLarge,
    ResolutionMismatch,
    SimplexViolation,
)
from .gaussian_paths import (
    CovarianceModel,
    GridSpec,
    ScalarPath,
    SeedSpec,
    fbm_covariance,
    fgn_autocovariance,
    sample_fbm_circulant,
    sample_fbm_ensemble,
    sample_gaussian_cholesky,
)
from .matrix_ensemble import (
    HermMatrixPath,
    SymMatrixPath,
    assemble_hermitian,
    assemble_symmetric,
    eigen_density_log,
    sample_sym_fbm_path,
)
from .spectral import (
    EigenDecomposition,
    EigenDerivatives,
    EigenPath,
    eigen_derivatives,
    eigen_path,
    eigh_jacobi,
    hoffman_wielandt_gap,
    jacobi_eigh_batch,
)
from .dynamics import (
    DysonDecomposition,
    YoungCheckReport,
    drift_integral,
    dyson_euler,
    extract_Y,
    young_check_report,
    young_log_gap,
    young_skorohod_Y,
)
from .statistics import (
    TestReport,
    VariationReport,
    abs_moment_std_normal,
    expected_Y_variation,
    gaussianity_probe,
    holder_exponent,
    ks_critical_two_sample,
    ks_one_sample,
    ks_two_sample,
    median_of_means,
    min_gap,
    negative_moment_probe,
    p_variation,
    self_similarity_check,
    variation_report,
)

__version__ = "0.1.0"

from .harness import ExperimentConfig, run_suite  # noqa: E402 (needs __version__)
