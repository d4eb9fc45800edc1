"""laxforge: Calogero flows, explicit 2x2 Lax pairs for the rescaled
soft-edge operator at integer coupling, and numerical verification of the
identities the construction rests on."""

from .calogero import (
    CollisionError,
    ConvergenceError,
    ParticleState,
    Trajectory,
    auxiliary_A,
    compatibility_check,
    conservation_drift,
    coulomb_sums,
    default_q0,
    eom_rhs,
    first_integrals,
    governing_fields_from_state,
    governing_fields_from_trajectory,
    init_state,
    integrate,
    j0,
)
from .eigenflow import (
    EigenvectorField,
    fp_check,
    ode_in_x_check,
    path_independence_residual,
    propagate,
    transport_pde_check,
)
from .fields import (
    Grid2D,
    Polynomial,
    ResidualReport,
    StencilError,
    fd_partials,
    poly_div,
    poly_eval,
    residual_norms,
)
from .fpcore import (
    CoefficientField,
    Field2D,
    FokkerPlanckSpec,
    GenericFields,
    LaxDerived,
    LaxMatrices,
    ScalarEntry,
    TabulatedPair,
    coefficient_from_expression,
    constraint_residuals,
    fp_residual,
    governing_residuals,
    heat_spec,
    ode_in_x_coefficients,
    quantum_pii_spec,
    restore_lax,
    zero_curvature_residuals,
)
from .laxbuild import (
    BuilderConfig,
    PIILaxResult,
    PIIPairFamily,
    PolynomialityError,
    build_bd,
    build_ld,
    build_lplus,
    build_pair,
    build_vpart,
    degree_audit,
)
from .pii_reference import (
    HMSolution,
    airy_ai,
    airy_ai_prime,
    baik_rains_lax,
    baik_rains_pair,
    particles_from_hm,
    reference_fields,
    solve_hastings_mcleod,
)

__version__ = "0.1.0"
