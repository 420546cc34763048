"""Deterministic bounds and a 2^n-factor approximation for the permanent
of nonnegative matrices, built on Sinkhorn scaling and the Bethe
functional, with exact small-scale oracles, Orlicz-norm upper bounds, and
monomer-dimer lower bounds for verification."""

from .bethe import (
    BetheSolution,
    BoundReport,
    approximate_permanent,
    bethe_functional,
    cw_functional,
    cw_gradient,
    lower_bound_general,
    maximize_bethe,
    product_relaxation,
    relative_entropy_relaxation,
    schrijver_lower,
)
from .dimers import (
    DimerBoundReport,
    DimerInstance,
    empirical_beta,
    evaluate_instance,
    friedland_limit_beta,
    friedland_lower_bound,
    per_m_auto,
    proposition_friedland_check,
    sample_lambda,
    sample_mean_log_per_m,
)
from .errors import (
    DimensionError,
    DomainError,
    NonConvergenceError,
    SizeLimitError,
    ZeroPermanentError,
)
from .exact import (
    PermanentValue,
    per_m_direct,
    per_m_via_block,
    permanent_bruteforce,
    permanent_ryser,
)
from .matrix import (
    Matrix,
    StochasticityReport,
    as_matrix,
    classify,
    dump_matrix,
    format_matrix,
    load_matrix,
    parse_matrix,
    support_has_perfect_matching,
)
from .orlicz import (
    BregmanBound,
    PsiConditionReport,
    PsiFunction,
    bethe_upper_bound,
    bregman_bound,
    min_row_constant,
    orlicz_norm,
    phi0_eval,
    psi_eval,
    solve_root_a,
    unit_extension_norm,
    upper_bound_orlicz,
    verify_psi_conditions,
)
from .scaling import ScalingResult, scaling_relation_check, sinkhorn_scale

__version__ = "0.1.0"
