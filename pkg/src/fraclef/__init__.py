"""fraclef: the one-parameter solution family of a singular fractional equation.

Constructs, solves, and cross-verifies the family {U_K} of solutions to
(-Delta)^s u = t^alpha / u^gamma on the positive half line with zero extended
Dirichlet data, at desk scale, with every derived constant checked against an
independent oracle.
"""

__version__ = "0.1.0"

from .analysis import (
    CheckResult,
    SlopeFit,
    VerificationReport,
    check_minimality,
    check_monotone_t,
    check_sandwich,
    check_scaling,
    check_slope_continuity,
    extract_slope,
    nonexistence_probe,
)
from .fracop import Grid, PowerTail, assemble, getoor_check, validate_power
from .green import fit_far_field, g1, gn, green_rhs, reduce_check, u0_green_identity
from .homogeneous import (
    FracParams,
    HomogeneousSolution,
    Regime,
    classify_regime,
    homogeneous_solution,
    k_beta,
    pv_oracle_power,
    scaling_exponents,
)
from .quadrature import QuadratureError, QuadSpec
from .solver import (
    Provenance,
    SolutionProfile,
    SolveSpec,
    SolverError,
    continue_in_b,
    profile_interp,
    restrict_profile,
    solve_bounded,
    solve_epsilon_levels,
    solve_zero_exterior,
)

__all__ = [
    "__version__",
    "CheckResult", "SlopeFit", "VerificationReport",
    "check_minimality", "check_monotone_t", "check_sandwich",
    "check_scaling", "check_slope_continuity", "extract_slope",
    "nonexistence_probe",
    "Grid", "PowerTail", "assemble", "getoor_check", "validate_power",
    "fit_far_field", "g1", "gn", "green_rhs", "reduce_check",
    "u0_green_identity",
    "FracParams", "HomogeneousSolution", "Regime", "classify_regime",
    "homogeneous_solution", "k_beta", "pv_oracle_power",
    "scaling_exponents",
    "QuadratureError", "QuadSpec",
    "Provenance", "SolutionProfile", "SolveSpec", "SolverError",
    "continue_in_b", "profile_interp", "restrict_profile", "solve_bounded",
    "solve_epsilon_levels", "solve_zero_exterior",
]
