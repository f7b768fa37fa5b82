"""Cost-reduced implicit exponential Runge-Kutta integrators for ``y' + M y = f(y)``."""

from .errors import (ERKError, ExpmOverflowError, InvalidGridError, InvalidInputError,
                     InvalidParameterError, NonConvergenceError, SingularStageError,
                     UnknownMethodError, UnreliableReferenceError, UnsupportedOrderError)
from .integrators import (SolveOptions, Stepper, Trajectory, correction_term, integrate,
                          mverk_step, phi_erk_step, step, sverk_step)
from .linalg import krylov_apply, mat_exp, phi_functions, phi_mat
from .problems import (HamiltonianMeta, ReferenceSolution, SemiLinearIVP, duffing, energy,
                       get_problem, henon_heiles, linear_problem, sine_gordon)
from .schemes import SCHEME_NAMES, ERKScheme, make_scheme
from .stability import StabilityGrid, amplification_factor, stability_scan
from .verification import check_linear_exactness, check_order_conditions, check_symplecticity

__version__ = "0.1.0"

__all__ = [
    "ERKError", "ExpmOverflowError", "InvalidGridError", "InvalidInputError",
    "InvalidParameterError", "NonConvergenceError", "SingularStageError",
    "UnknownMethodError", "UnreliableReferenceError", "UnsupportedOrderError",
    "SolveOptions", "Stepper", "Trajectory", "correction_term", "integrate",
    "mverk_step", "phi_erk_step", "step", "sverk_step",
    "krylov_apply", "mat_exp", "phi_functions", "phi_mat",
    "HamiltonianMeta", "ReferenceSolution", "SemiLinearIVP", "duffing", "energy",
    "get_problem", "henon_heiles", "linear_problem", "sine_gordon",
    "SCHEME_NAMES", "ERKScheme", "make_scheme",
    "StabilityGrid", "amplification_factor", "stability_scan",
    "check_linear_exactness", "check_order_conditions", "check_symplecticity",
]
