"""Spectral triples of harmonic tori in the 3-sphere, as polynomial data.

The package models triples (P, b1, b2) of complex polynomials: P cuts out a
real hyperelliptic curve eta^2 = P(zeta) and the b^i are numerators of
meromorphic differentials b(zeta) dzeta / (zeta^2 eta).  It validates the
admissibility conditions (reality, simple non-circle roots, residue-free
poles, periods and closing integrals on the 2*pi*i lattice, independent
principal parts, scaling normalization), constructs the two-dimensional
space of period-preserving (Whitham) tangent vectors, and traces finite
deformation paths by Newton projection back onto the condition level set.
"""

from .errors import (
    CircleRootError,
    DegenerateKernelError,
    DegreeBoundError,
    GeometryError,
    InternalInconsistencyError,
    MultipleRootError,
    NoSolutionError,
    NotDeformableError,
    NumericalFailureError,
    PathConstructionError,
    ProjectionFailureError,
    RealityViolationError,
    SingularOperatorError,
    StepSizeError,
    UndefinedConformalTypeError,
    WhithamError,
    ZeroPolynomialError,
)
from .polyring import (
    FactorStructure,
    Polynomial,
    approx_gcd,
    factor_structure,
    is_real_section,
    real_defect,
    real_pullback,
    roots,
    symmetrize,
)
from .bezout import (
    BezoutSolution,
    RootSpec,
    SolutionSpace,
    confluent_vandermonde,
    minimal_solution,
    realify,
    solution_space,
)
from .curve import (
    CycleBasis,
    Differential,
    HyperellipticCurve,
    PathOnCurve,
    build_curve,
    homology_basis,
    integrate,
    residue_at_zero,
    residue_condition,
)
from .spectral import (
    PsiFrame,
    PsiVector,
    SpectralTriple,
    ToleranceProfile,
    ValidationReport,
    conformal_type,
    d_psi,
    normalize,
    psi,
    validate,
)
from .deformation import (
    CaseAParams,
    CaseBLinearParams,
    CaseBQuadParams,
    CaseEParams,
    CaseLabel,
    TangentVector,
    classify,
    conformal_type_rate,
    r_kernel,
    r_value,
    recover_chat,
    solve_empdi,
    solve_q_equation,
    tangent_basis,
)
from .flow import (
    FlowConfig,
    PathSample,
    flow_step,
    project_to_mg,
    seed_conformal_genus0,
    seed_genus0,
    seed_genus1,
    trace,
)

__all__ = [
    "BezoutSolution",
    "RootSpec",
    "SolutionSpace",
    "confluent_vandermonde",
    "minimal_solution",
    "realify",
    "solution_space",
    "CycleBasis",
    "Differential",
    "HyperellipticCurve",
    "PathOnCurve",
    "build_curve",
    "homology_basis",
    "integrate",
    "residue_at_zero",
    "residue_condition",
    "PsiFrame",
    "PsiVector",
    "SpectralTriple",
    "ToleranceProfile",
    "ValidationReport",
    "conformal_type",
    "d_psi",
    "normalize",
    "psi",
    "validate",
    "CaseAParams",
    "CaseBLinearParams",
    "CaseBQuadParams",
    "CaseEParams",
    "CaseLabel",
    "TangentVector",
    "classify",
    "conformal_type_rate",
    "r_kernel",
    "r_value",
    "recover_chat",
    "solve_empdi",
    "solve_q_equation",
    "tangent_basis",
    "FlowConfig",
    "PathSample",
    "flow_step",
    "project_to_mg",
    "seed_conformal_genus0",
    "seed_genus0",
    "seed_genus1",
    "trace",
    "Polynomial",
    "FactorStructure",
    "approx_gcd",
    "factor_structure",
    "is_real_section",
    "real_defect",
    "real_pullback",
    "roots",
    "symmetrize",
    "WhithamError",
    "DegreeBoundError",
    "ZeroPolynomialError",
    "NumericalFailureError",
    "NoSolutionError",
    "RealityViolationError",
    "CircleRootError",
    "MultipleRootError",
    "PathConstructionError",
    "GeometryError",
    "StepSizeError",
    "NotDeformableError",
    "InternalInconsistencyError",
    "DegenerateKernelError",
    "SingularOperatorError",
    "ProjectionFailureError",
    "UndefinedConformalTypeError",
]

__version__ = "0.1.0"
