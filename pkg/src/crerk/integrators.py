"""Stage solvers, correction terms and the constant-stepsize integration loop.

A :class:`Stepper` owns every ``(scheme, h, M)``-dependent quantity of a run:
the exponentials ``exp(-c_i h M)``, the phi-valued weights of the collocation
schemes and the LU factors of the linearly implicit stage system.  They are
built once and reused for every step.
"""

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .errors import (InvalidGridError, NonConvergenceError, SingularStageError,
                     UnsupportedOrderError)
from .linalg import krylov_apply, mat_exp, phi_functions
from .schemes import MVERK, PHI_ERK, SVERK, make_scheme, phi_tableau

__all__ = [
    "SolveOptions",
    "Trajectory",
    "Stepper",
    "correction_term",
    "correction_from_actions",
    "solve_stages",
    "sverk_step",
    "mverk_step",
    "phi_erk_step",
    "step",
    "integrate",
    "PURE",
    "LINEARLY_IMPLICIT",
]

PURE = "pure-fixed-point"
LINEARLY_IMPLICIT = "linearly-implicit"
_SOLVER_ALIASES = {"pure": PURE, PURE: PURE, "linimp": LINEARLY_IMPLICIT,
                   LINEARLY_IMPLICIT: LINEARLY_IMPLICIT}

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SolveOptions:
    """Stage-iteration settings.

    ``stage_solver=None`` picks the family default: linearly implicit for
    MVERK, pure fixed point otherwise.  ``krylov_threshold`` switches the
    ``exp(-c h M) v`` products to :func:`crerk.linalg.krylov_apply` for
    problems whose dimension exceeds it.
    """

    fp_tol: float = 1e-14
    max_iter: int = 100
    stage_solver: Optional[str] = None
    record_energy: bool = False
    krylov_threshold: Optional[int] = None

    def __post_init__(self):
        if not self.fp_tol > 0:
            raise ValueError("fp_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.stage_solver is not None and self.stage_solver not in _SOLVER_ALIASES:
            raise ValueError(f"unknown stage solver {self.stage_solver!r}")

    def solver_for(self, family):
        if self.stage_solver is not None:
            return _SOLVER_ALIASES[self.stage_solver]
        return LINEARLY_IMPLICIT if family == MVERK else PURE


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    iterations: np.ndarray
    energies: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def final(self):
        return self.states[-1]


# --- correction terms --------------------------------------------------------

def correction_from_actions(family, order, h, apply_M, f0, g0, jac, hess):
    """Correction term assembled from operator actions at ``y0``.

    ``apply_M(v) = M v``, ``jac(v) = f'(y0) v`` and ``hess(u, v) = f''(y0)(u, v)``;
    ``f0 = f(y0)`` and ``g0 = -M y0 + f(y0)``.  Works for arrays as well as
    complex scalars.
    """
    if order == 1:
        return 0.0 * f0
    if order == 3 or order not in (2, 4):
        raise UnsupportedOrderError(f"no correction term for order {order}")
    if family not in (SVERK, MVERK):
        raise UnsupportedOrderError(f"family {family!r} carries no correction term")
    Mf = apply_M(f0)
    w = -(h**2 / 2.0) * Mf
    if order == 2:
        return w
    M2f = apply_M(Mf)
    Jg = jac(g0)
    MJg = apply_M(Jg)
    Hgg = hess(g0, g0)
    # f'(-M + f') g
    JgJ = jac(-apply_M(g0) + Jg)
    if family == SVERK:
        third = M2f - jac(Mf) - MJg
        fourth = (-apply_M(M2f) + jac(M2f) + apply_M(MJg) - apply_M(Hgg)
                  - apply_M(JgJ) - jac(MJg) - jac(jac(Mf)) + 3.0 * hess(-Mf, g0))
    else:
        third = M2f - MJg
        fourth = -apply_M(M2f) + apply_M(MJg) - apply_M(Hgg) - apply_M(JgJ)
    return w + (h**3 / 6.0) * third + (h**4 / 24.0) * fourth


def correction_term(family, order, problem, y0, h):
    """Vector correction ``w_s`` (SVERK) or ``w-bar_s`` (MVERK) at ``y0``."""
    y0 = np.asarray(y0, dtype=float)
    M = problem.M
    f0 = problem.f(y0)
    g0 = -M @ y0 + f0
    return correction_from_actions(
        family, order, h,
        apply_M=lambda v: M @ v,
        f0=f0, g0=g0,
        jac=lambda v: problem.jac_action(y0, v),
        hess=lambda u, v: problem.hess_bilinear(y0, u, v),
    )


# --- stage solver -------------------------------------------------------------

def solve_stages(stage_map, initial_guess, opts=None, noise_factor=16.0):
    """Successive substitution ``x <- stage_map(x)``.

    Stops when two successive iterates differ in norm by less than
    ``opts.fp_tol``.  An absolute tolerance can lie below the rounding noise
    of the map itself (large states, ill-conditioned linear solves), so the
    iteration also stops once the difference is below
    ``noise_factor * eps * ||x||`` and has stopped contracting.

    Returns ``(x, iterations)``; raises :class:`NonConvergenceError` after
    ``opts.max_iter`` iterations or when the iterates blow up.
    """
    opts = opts or SolveOptions()
    x = np.asarray(initial_guess)
    start = np.linalg.norm(x)
    diff = prev = np.inf
    for it in range(1, opts.max_iter + 1):
        x_new = np.asarray(stage_map(x))
        diff = float(np.linalg.norm(x_new - x))
        x = x_new
        if not np.isfinite(diff) or diff > 1e12 * (1.0 + start):
            raise NonConvergenceError(
                f"stage iteration diverged after {it} iterations (difference {diff:.3e})",
                residual=diff, iterations=it)
        if diff < opts.fp_tol:
            return x, it
        scale = np.linalg.norm(x)
        if diff <= 16.0 * _EPS * scale:
            return x, it
        if diff <= noise_factor * _EPS * scale and diff > 0.5 * prev:
            return x, it
        prev = diff
    raise NonConvergenceError(
        f"stage iteration did not converge in {opts.max_iter} iterations "
        f"(last difference {diff:.3e}, tolerance {opts.fp_tol:.1e})",
        residual=diff, iterations=opts.max_iter)


# --- stepper ------------------------------------------------------------------

def _phi_weights(scheme, h, M):
    """Materialise the phi-valued stage matrix (block ``s n x s n``) and weights (``n x s n``)."""
    Z = -h * M
    E, Q1, Q2 = phi_functions(Z)
    stage_exps = []
    P1, P2 = [], []
    for ci in scheme.c:
        if ci == 1.0:
            Ei, p1, p2 = E, Q1, Q2
        else:
            Ei, p1, p2 = phi_functions(ci * Z)
        stage_exps.append(Ei)
        P1.append(p1)
        P2.append(p2)
    A, b = phi_tableau(scheme, P1, P2, Q1, Q2)
    Ablk = np.block(A)
    Bblk = np.hstack(b)
    return E, stage_exps, Ablk, Bblk


class Stepper:
    """One-step map of ``scheme`` on ``problem`` with fixed stepsize ``h``."""

    def __init__(self, scheme, problem, h, opts=None):
        if isinstance(scheme, str):
            scheme = make_scheme(scheme)
        self.scheme = scheme
        self.problem = problem
        self.h = float(h)
        self.opts = opts or SolveOptions()
        self.solver = self.opts.solver_for(scheme.family)
        M = problem.M
        n = problem.dim
        self.n = n
        self._krylov = (self.opts.krylov_threshold is not None and n > self.opts.krylov_threshold)

        if scheme.family == PHI_ERK:
            self.E, self.stage_exps, self.Aphi, self.Bphi = _phi_weights(scheme, self.h, M)
        else:
            self.E = None if self._krylov else mat_exp(-self.h * M)
            self.stage_exps = []
            if scheme.family == SVERK and not self._krylov:
                for ci in scheme.c:
                    self.stage_exps.append(self.E if ci == 1.0 else mat_exp(-ci * self.h * M))
        self._lu = None
        self._noise = 16.0
        if scheme.family == MVERK and self.solver == LINEARLY_IMPLICIT:
            K = np.eye(scheme.stage_count * n) + self.h * np.kron(scheme.A, M)
            self._lu = _factor(K)
            self._noise = 16.0 * max(1.0, np.linalg.cond(K))
        elif scheme.family == MVERK:
            self._noise = 16.0 * max(1.0, self.h * np.abs(scheme.A).sum(axis=1).max()
                                     * np.linalg.norm(M, np.inf))
        else:
            exps = [E for E in self.stage_exps if E is not None] or [np.eye(1)]
            self._noise = 16.0 * max(1.0, max(np.linalg.norm(E, np.inf) for E in exps))

    # exp(-c h M) v
    def _expv(self, c, v, index=None):
        if self._krylov:
            return krylov_apply(-c * self.h * self.problem.M, v, "exp",
                                subspace_dim=min(self.n, 60), tol=1e-13, dense_threshold=0)
        if c == 1.0:
            return self.E @ v
        return self.stage_exps[index] @ v

    def step(self, y):
        """Advance ``y`` by one step; returns ``(y1, iterations)``."""
        y = np.asarray(y, dtype=float)
        fam = self.scheme.family
        if fam == SVERK:
            return self._sverk(y)
        if fam == MVERK:
            return self._mverk(y)
        return self._phi(y)

    def _sverk(self, y):
        sch, prob, h = self.scheme, self.problem, self.h
        base = np.array([self._expv(ci, y, i) for i, ci in enumerate(sch.c)])
        A = sch.A
        f = prob.f

        def stage_map(Y):
            F = np.array([f(Yi) for Yi in Y])
            return base + h * (A @ F)

        Y, iters = solve_stages(stage_map, base, self.opts, self._noise)
        F = np.array([f(Yi) for Yi in Y])
        y1 = self._expv(1.0, y) + h * (sch.b @ F)
        if sch.order > 1:
            y1 = y1 + correction_term(SVERK, sch.order, prob, y, h)
        return y1, iters

    def _mverk(self, y):
        sch, prob, h = self.scheme, self.problem, self.h
        A = sch.A
        f = prob.f
        s, n = sch.stage_count, self.n
        Y0 = np.tile(y, (s, 1))
        if self._lu is None:
            MT = prob.M.T

            def stage_map(Y):
                G = -(Y @ MT) + np.array([f(Yi) for Yi in Y])
                return Y0 + h * (A @ G)
        else:
            lu = self._lu

            def stage_map(Y):
                F = np.array([f(Yi) for Yi in Y])
                rhs = (Y0 + h * (A @ F)).reshape(s * n)
                return lu_solve(lu, rhs, check_finite=False).reshape(s, n)

        Y, iters = solve_stages(stage_map, Y0, self.opts, self._noise)
        F = np.array([f(Yi) for Yi in Y])
        y1 = self._expv(1.0, y) + h * (sch.b @ F)
        if sch.order > 1:
            y1 = y1 + correction_term(MVERK, sch.order, prob, y, h)
        return y1, iters

    def _phi(self, y):
        sch, prob, h = self.scheme, self.problem, self.h
        f = prob.f
        s, n = sch.stage_count, self.n
        base = np.concatenate([Ei @ y for Ei in self.stage_exps])
        if sch.explicit:
            xi = f(y)
            iters = 0
        else:
            Aphi = self.Aphi

            def stage_map(xi):
                Y = base + h * (Aphi @ xi)
                return np.concatenate([f(Y[i * n:(i + 1) * n]) for i in range(s)])

            xi, iters = solve_stages(stage_map, np.tile(f(y), s), self.opts, self._noise)
        y1 = self.E @ y + h * (self.Bphi @ xi)
        return y1, iters


def _factor(K):
    with warnings.catch_warnings():
        # singularity is reported below as SingularStageError
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(K, check_finite=False)
    d = np.abs(np.diag(lu))
    if not np.all(np.isfinite(d)) or d.min() <= K.shape[0] * _EPS * max(d.max(), 1.0):
        raise SingularStageError("stage matrix I + h (A kron M) is singular")
    return lu, piv


# --- spec-level one-step entry points ----------------------------------------

def _check_family(scheme, family):
    if isinstance(scheme, str):
        scheme = make_scheme(scheme)
    if scheme.family != family:
        raise ValueError(f"{scheme.name} belongs to family {scheme.family}, not {family}")
    return scheme


def sverk_step(scheme, problem, y, h, opts=None):
    scheme = _check_family(scheme, SVERK)
    return Stepper(scheme, problem, h, opts).step(y)


def mverk_step(scheme, problem, y, h, opts=None):
    scheme = _check_family(scheme, MVERK)
    return Stepper(scheme, problem, h, opts).step(y)


def phi_erk_step(scheme, problem, y, h, opts=None):
    scheme = _check_family(scheme, PHI_ERK)
    return Stepper(scheme, problem, h, opts).step(y)


def step(scheme, problem, y, h, opts=None):
    """One step of any catalogued scheme."""
    return Stepper(scheme, problem, h, opts).step(y)


def step_count(t0, t_end, h):
    """Number of steps of size ``h`` between ``t0`` and ``t_end``; must be a positive integer."""
    span = t_end - t0
    if not h > 0:
        raise InvalidGridError(f"stepsize must be positive, got {h}")
    ratio = span / h
    n = int(round(ratio))
    if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, abs(ratio)):
        raise InvalidGridError(
            f"(t_end - t0) / h = {ratio!r} is not a positive integer (t0={t0}, t_end={t_end}, h={h})")
    return n


def integrate(scheme, problem, t_end, h, opts=None):
    """Integrate on the uniform grid ``t0, t0 + h, ..., t_end``.

    Step failures are re-raised with ``step_index`` set on the exception.
    """
    if isinstance(scheme, str):
        scheme = make_scheme(scheme)
    opts = opts or SolveOptions()
    t0 = problem.t0
    n = step_count(t0, t_end, h)
    stepper = Stepper(scheme, problem, h, opts)
    states = np.empty((n + 1, problem.dim))
    states[0] = problem.y0
    iterations = np.zeros(n + 1, dtype=int)
    y = problem.y0.copy()
    for i in range(n):
        try:
            y, it = stepper.step(y)
        except NonConvergenceError as exc:
            exc.step_index = i
            exc.args = (f"step {i}: {exc.args[0]}",)
            raise
        except SingularStageError as exc:
            exc.step_index = i
            raise
        states[i + 1] = y
        iterations[i + 1] = it
    times = t0 + h * np.arange(n + 1)
    energies = None
    if opts.record_energy and problem.hamiltonian is not None:
        H = problem.hamiltonian.hamiltonian
        energies = np.array([H(s) for s in states])
    return Trajectory(times=times, states=states, iterations=iterations, energies=energies,
                      meta={"scheme": scheme.name, "problem": problem.name, "h": h,
                            "stage_solver": stepper.solver})
