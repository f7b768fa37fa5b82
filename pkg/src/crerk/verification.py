"""Checks of order conditions, symplecticity and exact linear integration."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedOrderError
from .integrators import SolveOptions, Stepper, integrate
from .linalg import mat_exp
from .problems import canonical_J, linear_problem

__all__ = [
    "ConditionReport",
    "SymplecticDefect",
    "check_order_conditions",
    "check_symplecticity",
    "check_linear_exactness",
    "ORDER_CONDITION_LABELS",
]

ORDER_CONDITION_LABELS = (
    "sum b = 1",
    "sum b c = 1/2",
    "sum b c^2 = 1/3",
    "sum b a c = 1/6",
    "sum b c^3 = 1/4",
    "sum b c a c = 1/8",
    "sum b a c^2 = 1/12",
    "sum b a a c = 1/24",
)

_CUMULATIVE = {1: 1, 2: 2, 4: 8}


@dataclass(frozen=True)
class ConditionReport:
    labels: tuple
    residuals: tuple

    @property
    def max_residual(self):
        return max(self.residuals) if self.residuals else 0.0


@dataclass(frozen=True)
class SymplecticDefect:
    jacobian: np.ndarray
    defect_norm: float


def _order_condition_values(A, b, c):
    s = len(b)
    r = range(s)
    return (
        math.fsum(b[i] for i in r),
        math.fsum(b[i] * c[i] for i in r),
        math.fsum(b[i] * c[i] ** 2 for i in r),
        math.fsum(b[i] * A[i][j] * c[j] for i in r for j in r),
        math.fsum(b[i] * c[i] ** 3 for i in r),
        math.fsum(b[i] * c[i] * A[i][j] * c[j] for i in r for j in r),
        math.fsum(b[i] * A[i][j] * c[j] ** 2 for i in r for j in r),
        math.fsum(b[i] * A[i][j] * A[j][k] * c[k] for i in r for j in r for k in r),
    )


_TARGETS = (1.0, 1 / 2, 1 / 3, 1 / 6, 1 / 4, 1 / 8, 1 / 12, 1 / 24)


def check_order_conditions(A, b, c, target_order):
    """Residuals of the classical RK conditions up to ``target_order`` (1, 2 or 4).

    Sums are evaluated with :func:`math.fsum`; each residual is
    ``|fsum(products) - target|``.
    """
    if target_order not in _CUMULATIVE:
        raise UnsupportedOrderError(f"order conditions are listed for p in (1, 2, 4), not {target_order}")
    A = np.atleast_2d(np.asarray(A, dtype=float)).tolist()
    b = np.atleast_1d(np.asarray(b, dtype=float)).tolist()
    c = np.atleast_1d(np.asarray(c, dtype=float)).tolist()
    if len(A) != len(b) or len(c) != len(b) or any(len(row) != len(b) for row in A):
        raise ValueError("inconsistent tableau dimensions")
    count = _CUMULATIVE[target_order]
    values = _order_condition_values(A, b, c)[:count]
    residuals = tuple(abs(math.fsum([v, -t])) for v, t in zip(values, _TARGETS))
    return ConditionReport(labels=ORDER_CONDITION_LABELS[:count], residuals=residuals)


def check_symplecticity(scheme, problem, y, h, fd_eps=1e-6, opts=None):
    """Frobenius norm of ``Psi^T J Psi - J`` for the finite-difference Jacobian ``Psi`` of one step."""
    if problem.hamiltonian is None:
        raise ValueError(f"problem {problem.name!r} has no Hamiltonian structure")
    if not fd_eps > 0:
        raise ValueError("fd_eps must be positive")
    y = np.asarray(y, dtype=float)
    stepper = Stepper(scheme, problem, h, opts or SolveOptions())
    n = y.shape[0]
    Psi = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = fd_eps
        plus, _ = stepper.step(y + e)
        minus, _ = stepper.step(y - e)
        Psi[:, j] = (plus - minus) / (2.0 * fd_eps)
    J = canonical_J(problem.hamiltonian.canonical_dim)
    defect = float(np.linalg.norm(Psi.T @ J @ Psi - J, "fro"))
    return SymplecticDefect(jacobian=Psi, defect_norm=defect)


def check_linear_exactness(scheme, M, y0, h, n_steps, opts=None):
    """``||y_n - exp(-n h M) y0||_2`` for the homogeneous problem ``f = 0``."""
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    problem = linear_problem(M, y0)
    traj = integrate(scheme, problem, n_steps * h, h, opts)
    exact = mat_exp(-n_steps * h * np.asarray(M, dtype=float)) @ np.asarray(y0, dtype=float)
    return float(np.linalg.norm(traj.final - exact))
