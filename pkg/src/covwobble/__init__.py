"""covwobble: stationary Gaussian vector sequences whose normalized
block-sum covariance matrices track a prescribed finite family of target
matrices along explicit block lengths, with measurable strong-mixing
behavior.

The library is organized around the pipeline

    targets -> lattice decomposition -> spectral level recursion
            -> exact block covariances -> sampling and dependence checks

with a CLI (``covwobble``) that writes JSON/CSV reports and figures.
"""

from .config import RunConfig, default_config, parse_config
from .dependence import (
    WindowSpec,
    canonical_corrs,
    composition_checks,
    decay_scan,
    mi_hat,
    process_autocov,
    rho_hat,
)
from .errors import CovwobbleError
from .lattice import (
    BasisSet,
    CoeffArray,
    LatticeParams,
    build_basis,
    decompose,
    lattice_params,
    round_to_H,
    verify_decomposition,
)
from .matrices import (
    Band,
    eigen_decompose,
    entrywise_within,
    eta_bounds,
    in_band,
    matrix_power,
    random_in_band,
    symmetrize,
)
from .perturb import (
    CoefficientScheme,
    PerturbRequest,
    PerturbResult,
    build_gc,
    cap_M,
    coeff_a,
    construct_h,
    fejer_gc,
    harmonic_gc,
    select_c0,
    verify_conclusions,
)
from .recursion import (
    ConstructionConfig,
    ConstructionResult,
    advance_level,
    exact_block_cov,
    init_constants,
    init_level,
    run_recursion,
)
from .sampling import (
    CirculantEmbedding,
    ProcessSpec,
    add_bernoulli_perturbation,
    assemble_path,
    empirical_partial_sum_cov,
    normality_diagnostic,
    process_spec,
    sample_block,
    sample_paths,
)
from .spectral import (
    AutocovarianceTable,
    CosineSeries,
    ExpFejerTable,
    GridSpec,
    autocov_of_exp,
    evaluate,
    fejer_integral_exp,
    fejer_integral_exp_direct,
    fejer_kernel,
    fejer_rank,
    psi,
    psi_subadditive_check,
)

__version__ = "0.1.0"
