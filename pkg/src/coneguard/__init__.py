"""Diagnostics for multifold second-order-cone and semidefinite programs.

The package classifies constraint blocks at a point, verifies constraint
qualifications numerically with explicit certificates, certifies
approximate-stationarity traces, recovers candidate multipliers from such
traces, and ships a small augmented Lagrangian solver that produces them.
"""

__version__ = "0.1.0"

from .akkt import (
    AkktRecord,
    AkktTrace,
    CertifyOutcome,
    RecoveryOutcome,
    akkt_residual,
    build_trace,
    certify_akkt,
    dump_trace,
    dumps_trace,
    load_trace,
    loads_trace,
    recover_kkt,
    verify_kkt,
)
from .alm import AlmConfig, solve
from .certificates import (
    CaratheodoryResult,
    Certificate,
    ConeMembership,
    DependenceWitness,
    caratheodory_reduce,
    cone_membership,
    conic_dependence,
    extend_basis,
    nnls,
    numerical_rank,
    verify_dependence,
)
from .classify import IndexClassification, classify
from .cones import (
    SocRegion,
    SocVector,
    SpectralData,
    SymMatrix,
    classify_soc,
    eig_sym,
    jordan_identity,
    jordan_product,
    project_psd,
    project_soc,
    psd_distance,
    reflect,
    smat,
    soc_distance,
    soc_from_array,
    svec,
    svec_dim,
)
from .cqchecks import (
    CqReport,
    check_crsc,
    check_nondegeneracy,
    check_rcpld,
    check_robinson,
)
from .errors import (
    BudgetExhaustedError,
    ConeguardError,
    DimensionMismatchError,
    DomainError,
    EigenConvergenceError,
    ExprSyntaxError,
    InfeasiblePointError,
    NonSimpleEigenvalueError,
    ProblemFormatError,
    ReconstructionError,
    SymmetryError,
    UnknownIdentifierError,
    VariableIndexError,
)
from .model import (
    ConicBlock,
    ConicProgram,
    EvaluatedPoint,
    apply_jacobian_adjoint,
    block_distances,
    dump,
    dumps,
    embed_block_diagonal,
    evaluate,
    load,
    loads,
)
from .reduction import (
    ReducedEntry,
    ReducedGradients,
    eigen_gap,
    phi_soc,
    reduced_view,
    sigma_min_grad,
)

__all__ = [
    "AkktRecord",
    "AkktTrace",
    "AlmConfig",
    "BudgetExhaustedError",
    "CaratheodoryResult",
    "Certificate",
    "CertifyOutcome",
    "ConeMembership",
    "ConeguardError",
    "ConicBlock",
    "ConicProgram",
    "CqReport",
    "DependenceWitness",
    "DimensionMismatchError",
    "DomainError",
    "EigenConvergenceError",
    "EvaluatedPoint",
    "ExprSyntaxError",
    "IndexClassification",
    "InfeasiblePointError",
    "NonSimpleEigenvalueError",
    "ProblemFormatError",
    "ReconstructionError",
    "RecoveryOutcome",
    "ReducedEntry",
    "ReducedGradients",
    "SocRegion",
    "SocVector",
    "SpectralData",
    "SymMatrix",
    "SymmetryError",
    "UnknownIdentifierError",
    "VariableIndexError",
    "akkt_residual",
    "apply_jacobian_adjoint",
    "block_distances",
    "build_trace",
    "caratheodory_reduce",
    "certify_akkt",
    "check_crsc",
    "check_nondegeneracy",
    "check_rcpld",
    "check_robinson",
    "classify",
    "classify_soc",
    "cone_membership",
    "conic_dependence",
    "dump",
    "dump_trace",
    "dumps",
    "dumps_trace",
    "eig_sym",
    "eigen_gap",
    "embed_block_diagonal",
    "evaluate",
    "extend_basis",
    "jordan_identity",
    "jordan_product",
    "load",
    "load_trace",
    "loads",
    "loads_trace",
    "nnls",
    "numerical_rank",
    "phi_soc",
    "project_psd",
    "project_soc",
    "psd_distance",
    "recover_kkt",
    "reduced_view",
    "reflect",
    "sigma_min_grad",
    "smat",
    "soc_distance",
    "soc_from_array",
    "solve",
    "svec",
    "svec_dim",
    "verify_dependence",
    "verify_kkt",
]
