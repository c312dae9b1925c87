"""Structure theory of time-reversed discrete symplectic systems on the half-line.

Recessive/dominant solutions, disconjugacy and controllability tests, the
quadratic functional, square-summability counts and the explicit boundary
data of the Friedrichs restriction, plus a JSON/CSV reporting CLI.
"""

from .errors import (
    ConfigError,
    DimensionMismatch,
    FileError,
    NotASolution,
    NotAdmissible,
    NotConverged,
    NotControllable,
    NotHermitian,
    NotRecessive,
    NotSymplectic,
    NumericFailure,
    Oscillatory,
    RangeMismatch,
    RankDeficientComplement,
    SingularX,
    SubmatrixCheckFailed,
    SympextError,
    WeightNotPositive,
)
from .extension import (
    Classification,
    FriedrichsData,
    LowerBoundCertificate,
    MembershipVerdict,
    SquareSummabilityReport,
    assemble_theta,
    boundary_form_limit,
    classify,
    count_square_summable,
    friedrichs_membership,
    lower_bound_certificate,
    select_pivot_rows,
)
from .linalg import Definiteness, definiteness_of, hermitian_eigen, pinv, rank_kernel
from .propagation import (
    MatrixSolution,
    RelationPair,
    VectorSolution,
    canonical_forcing,
    fundamental_matrix,
    is_solution,
    lagrange_check,
    pair_from_solution,
    propagate_backward,
    propagate_forward,
    read_sequence_csv,
    residual_profile,
    semi_inner,
    semi_norm_sq,
    step_backward,
    step_forward,
    write_sequence_csv,
)
from .recessive import (
    RecessiveResult,
    companion_decay,
    dominant_solution,
    lambda_accum,
    lambda_min_trace,
    principal_at,
    recessive_certificate,
    recessive_solution,
    trivialize,
)
from .structure import (
    ScanResult,
    controllability_check,
    disconjugacy_check,
    functional_shift_check,
    is_admissible,
    is_conjoined_basis,
    is_normalized_pair,
    nonoscillation_scan,
    principal_solution,
    quadratic_functional,
    quadratic_functional_reduced,
)
from .system import (
    CoefficientProvider,
    ConstantCoefficients,
    ExplicitCoefficients,
    PeriodicCoefficients,
    SymplecticSystem,
    WeightScaledCoefficients,
    build_system,
    check_atkinson,
    j_matrix,
    psi_of,
    s_lambda,
    v_of,
)
from .tolerances import DEFAULT, Tolerances

__version__ = "0.1.0"
