"""Hamilton-Jacobi equations on junctions: effective flux limiters, monotone
schemes and a large-deviation pipeline for diffusions with a discontinuous
interface."""

from .errors import (
    ArityMismatch,
    AssumptionViolated,
    BisectionBudgetExceeded,
    BracketNotFound,
    CFLViolation,
    ConfigError,
    GridMismatch,
    GridTooCoarse,
    JunctionHJError,
    LevelBelowMinimum,
    NonpositiveViscosity,
)
from .hamiltonian import (
    AbsoluteValue,
    Hamiltonian1D,
    ParamPoint,
    PiecewiseLinear,
    Quadratic,
    Trapezoid,
    validate,
)
from .junction import Affine, FluxLimited, Kirchhoff, Neumann, Tabulated, validate_assumptions_L
from .limiter import (
    check_representations,
    compute_A0,
    compute_AL,
    compute_Ae,
    compute_ishii,
    sweep_limiter,
    verify_Ae_equals_AIminus,
)
from .pde import JunctionGrid, solve_flux_limited, solve_viscous_kirchhoff, vvl_sweep

__version__ = "0.1.0"

__all__ = [
    "AbsoluteValue",
    "Affine",
    "ArityMismatch",
    "AssumptionViolated",
    "BisectionBudgetExceeded",
    "BracketNotFound",
    "CFLViolation",
    "ConfigError",
    "FluxLimited",
    "GridMismatch",
    "GridTooCoarse",
    "Hamiltonian1D",
    "JunctionGrid",
    "JunctionHJError",
    "Kirchhoff",
    "LevelBelowMinimum",
    "Neumann",
    "NonpositiveViscosity",
    "ParamPoint",
    "PiecewiseLinear",
    "Quadratic",
    "Tabulated",
    "Trapezoid",
    "check_representations",
    "compute_A0",
    "compute_AL",
    "compute_Ae",
    "compute_ishii",
    "solve_flux_limited",
    "solve_viscous_kirchhoff",
    "sweep_limiter",
    "validate",
    "validate_assumptions_L",
    "verify_Ae_equals_AIminus",
    "vvl_sweep",
]
