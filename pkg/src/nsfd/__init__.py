"""Positivity-preserving nonstandard integrators for planar split systems,
with equilibrium/stability analysis and scheme diagnostics."""

from ._kernels import HAVE_NUMBA, resolve_backend
from .systems import (
    ConstructionError,
    DomainError,
    ModelParams,
    PartialValues,
    Partials,
    SplitSystem,
    State,
    field_jacobian,
    from_selector,
    make_rosenzweig_macarthur,
    model1,
    model2,
    numeric_partials,
    vector_field,
)
from .integrators import (
    EULER,
    IDENTITY,
    NSFD,
    RK2,
    RK4,
    NonFiniteError,
    SchemeId,
    StepWeight,
    Trajectory,
    ensfd,
    ensfd_step,
    euler_step,
    exponential_weight,
    integrate,
    nsfd_step,
    rk2_step,
    rk4_step,
    scheme_from_name,
    step,
    step_count,
    weight_from_name,
)
from .equilibria import (
    ASYMPTOTICALLY_STABLE,
    MARGINAL,
    UNSTABLE,
    ContinuousStability,
    CriticalStep,
    DiscreteStability,
    EquilibriumPoint,
    EquilibriumSet,
    FamilyMismatch,
    NotStableError,
    classify_point,
    continuous_eigs,
    critical_step_E3,
    discrete_eigs,
    find_equilibria,
    jury_check,
    nsfd_map_jacobian,
    stability_report,
)
from .diagnostics import (
    ComparisonRow,
    ComparisonTable,
    GhostReport,
    MapFixedPoint,
    OrderEstimate,
    OscillationStats,
    PositivityAudit,
    ReferenceUnavailable,
    audit_positivity,
    compare_schemes,
    detect_ghosts,
    estimate_order,
    oscillation_stats,
)

__version__ = "0.1.0"
