"""Schwarzian derivatives of polynomial iterates and the escape-rate geometry they converge to."""

from .equivalence import (
    CriticalMultiset,
    EquivalenceResult,
    affine_match,
    critical_multiset,
    iterate_critical_multiset,
    iterate_equivalent,
    schwarzian_equivalent,
)
from .errors import (
    CapacityError,
    DomainError,
    NumericFailure,
    ParseError,
    PoleError,
    RegionTooSmallError,
    SchwzError,
    SingularityError,
)
from .escape import (
    GreenEval,
    GreenGrid,
    Region,
    critical_levels,
    escape_radius,
    green_eval,
    green_grid,
    green_values,
    precrit_sample,
    schwarzian_limit,
)
from .export import export_table, read_ppm, render_green_ppm
from .levels import (
    AnnulusRecord,
    LevelComponent,
    annulus_height,
    annulus_invariants,
    check_level,
    flux,
    level_components,
    singular_levels,
)
from .metric import (
    ConvergenceRow,
    Polyline,
    QDSampler,
    convergence_table,
    cylinder_circumference,
    do_curve_length,
    foliation_direction,
    l_half_distance,
    qd_curve_length,
    trace_trajectory,
)
from .poly import (
    AffineMap,
    CriticalPoint,
    Poly,
    apply_affine,
    compose,
    critical_points,
    eval_derivs,
    format_poly,
    iterate,
    parse_complex,
    parse_poly,
    preimages,
    roots,
)
from .scaled import ScaledComplex, scaled_from, scaled_mul, scaled_ratio_to_complex
from .schwarzian import (
    OrbitAccumulator,
    SchwarzianEstimate,
    cocycle_residual,
    laurent_coeff_pole2,
    nonlinearity_iterate_normalized,
    nonlinearity_value,
    normalized_nonlinearity,
    normalized_schwarzian,
    orbit_accumulator,
    schwarzian_iterate_normalized,
    schwarzian_value,
    third_derivative_ratio,
)

__version__ = "0.1.0"
