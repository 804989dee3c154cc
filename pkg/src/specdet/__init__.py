"""Step-function calculus for singular values, symmetric function spaces,
traces, and generalized determinants, with a seeded verification harness."""

from .stepfn import (
    CellDomainError,
    GridFn,
    MonotoneStepFn,
    apply_abs,
    apply_exp,
    apply_log,
    apply_log_minus,
    apply_log_plus,
    apply_min_const,
    decreasing_rearrangement,
    dilate2,
    integrate,
    left_continuous_version,
    psi_eval,
    psi_transform,
)
from .matmodel import (
    ENSEMBLE_KINDS,
    EnsembleSpec,
    MatrixOperator,
    abs_spectral_projection,
    fk_det,
    fk_det_eps,
    functional_calculus,
    haar_unitary,
    identity,
    lambda_matrix,
    load_matrix,
    mu_matrix,
    mu_neg_part,
    mu_pos_part,
    neg_part,
    op_exp,
    op_log,
    polar_abs,
    pos_part,
    sample,
    save_matrix,
    spectral_projection,
    truncate_at_level,
)
from .spaces import (
    BOUNDED,
    SUPERPOWER,
    DivergenceError,
    Membership,
    MembershipUndecidableError,
    PowerTail,
    PsiFn,
    SpectralProfile,
    SymmetricSpace,
    constant_profile,
    dilate2_profile,
    elog_membership,
    exp_flip_profile,
    marcinkiewicz_functional,
    membership,
    parse_profile_spec,
    parse_space,
    power_profile,
    profile_integral,
    projection_profile,
    psi_log,
    psi_prime_profile,
    scale_profile,
    space_linf,
    space_llog,
    space_lp,
    space_marcinkiewicz,
)
from .traces import (
    NonConvergentError,
    TraceFunctional,
    eval_functional,
    eval_on_operator,
    integral_trace,
    parse_trace,
    singular_trace,
)
from .dets import (
    DetDomainError,
    EpsComparison,
    MultiplicativityReport,
    UnsupportedProductError,
    UnsupportedProfileError,
    WitnessReport,
    commuting_profile_product,
    det_multiplicativity_check,
    det_phi,
    det_phi_with_branch,
    eps_limit_comparison,
    separating_witness_scenario,
)
from .verify import (
    DEFAULT_TOLERANCES,
    SUITE_NAMES,
    CheckReport,
    CheckRow,
    SuiteConfig,
    SuiteResult,
    result_to_json,
    rows_to_csv,
    run_check,
    run_suite,
)

__version__ = "0.1.0"
