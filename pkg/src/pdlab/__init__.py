"""Numerical laboratory for type 1,1 pseudo-differential operators on the
discrete torus: exact grid identities and empirical ratio experiments."""

from .frame import (
    DEFAULT_FRAME,
    LPFrame,
    ModulationFunction,
    block_project,
    lp_blocks,
    make_modulation,
)
from .grid import (
    GridFunction,
    GridSpec,
    SpectralFunction,
    fft_forward,
    fft_inverse,
    from_coeffs,
    grid_function_from_json,
    grid_function_to_json,
    lp_norm,
    random_band_limited,
    read_pdgf,
    single_mode,
    sobolev_norm,
    write_pdgf,
)
from .operators import (
    CoronaReport,
    ParadiffTerms,
    RefinementReport,
    VfmTrace,
    apply,
    apply_auto,
    apply_fast_elementary,
    corona_ball_report,
    kernel,
    kernel_apply,
    paradiff_split,
    spectral_support_rule_check,
    support_rule_check,
    vfm_apply,
    vfm_limit,
    vfm_refinement,
)
from .pointwise import (
    AuxCutoff,
    FactorizationReport,
    MaximalParams,
    ball_cutoff,
    corona_cutoff,
    cutoff_growth_check,
    default_maximal_params,
    fa_radius_exponent,
    factorization_check,
    maximal_lp_constant,
    mihlin_bound_check,
    mihlin_ratio,
    moment_decay_check,
    peetre_maximal,
    symbol_factor,
)
from .spaces import (
    BESOV,
    CoronaSeriesReport,
    EmbeddingReport,
    SpaceParams,
    TRIEBEL_LIZORKIN,
    besov_norm,
    corona_series_sum,
    embedding_report,
    format_space,
    holder_norm,
    lp_block_fields,
    parse_space,
    space_norm,
    summation_lemma_check,
    triebel_norm,
    vector_maximal_check,
)
from .symbols import (
    ChingSymbol,
    ConstantSymbol,
    ElementarySymbol,
    RadialBump,
    SeparableSymbol,
    Symbol,
    TabulatedSymbol,
    adjoint_symbol_matrix,
    build_chi,
    check_twisted_diagonal,
    ching_symbol,
    localize_symbol,
    mask_twisted_diagonal,
    modulate_symbol,
    parse_symbol_spec,
    random_elementary,
    read_pdsy,
    sigma_order_estimate,
    symbol_seminorm,
    write_pdsy,
)
from .experiments import (
    BLOW_UP,
    BOUNDED,
    INCONCLUSIVE,
    ExperimentReport,
    ReportRow,
    amplification_factor,
    ching_for_grid,
    dyadic_increments,
    family_indices,
    lacunary_input,
    parse_norm,
    run_continuity_table,
    run_counterexample,
    run_sigma_estimate,
    run_wavefront,
)

__version__ = "0.1.0"

__all__ = [
    "GridSpec",
    "GridFunction",
    "SpectralFunction",
    "fft_forward",
    "fft_inverse",
    "from_coeffs",
    "single_mode",
    "random_band_limited",
    "lp_norm",
    "sobolev_norm",
    "read_pdgf",
    "write_pdgf",
    "grid_function_to_json",
    "grid_function_from_json",
    "read_pdsy",
    "write_pdsy",
    "ModulationFunction",
    "LPFrame",
    "DEFAULT_FRAME",
    "make_modulation",
    "lp_blocks",
    "block_project",
    "Symbol",
    "RadialBump",
    "ChingSymbol",
    "ElementarySymbol",
    "SeparableSymbol",
    "TabulatedSymbol",
    "ConstantSymbol",
    "ching_symbol",
    "modulate_symbol",
    "build_chi",
    "localize_symbol",
    "mask_twisted_diagonal",
    "check_twisted_diagonal",
    "symbol_seminorm",
    "sigma_order_estimate",
    "adjoint_symbol_matrix",
    "parse_symbol_spec",
    "random_elementary",
    "apply",
    "apply_auto",
    "apply_fast_elementary",
    "vfm_apply",
    "vfm_limit",
    "vfm_refinement",
    "VfmTrace",
    "RefinementReport",
    "paradiff_split",
    "ParadiffTerms",
    "corona_ball_report",
    "CoronaReport",
    "MaximalParams",
    "AuxCutoff",
    "ball_cutoff",
    "corona_cutoff",
    "peetre_maximal",
    "symbol_factor",
    "factorization_check",
    "FactorizationReport",
    "maximal_lp_constant",
    "mihlin_ratio",
    "mihlin_bound_check",
    "fa_radius_exponent",
    "moment_decay_check",
    "cutoff_growth_check",
    "default_maximal_params",
    "kernel",
    "kernel_apply",
    "support_rule_check",
    "spectral_support_rule_check",
    "SpaceParams",
    "BESOV",
    "TRIEBEL_LIZORKIN",
    "besov_norm",
    "triebel_norm",
    "space_norm",
    "parse_space",
    "format_space",
    "lp_block_fields",
    "holder_norm",
    "embedding_report",
    "EmbeddingReport",
    "vector_maximal_check",
    "summation_lemma_check",
    "corona_series_sum",
    "CoronaSeriesReport",
    "ExperimentReport",
    "ReportRow",
    "BLOW_UP",
    "BOUNDED",
    "INCONCLUSIVE",
    "amplification_factor",
    "lacunary_input",
    "family_indices",
    "ching_for_grid",
    "parse_norm",
    "dyadic_increments",
    "run_counterexample",
    "run_wavefront",
    "run_continuity_table",
    "run_sigma_estimate",
    "__version__",
]
