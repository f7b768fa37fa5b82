"""Semilinear initial value problems ``y' + M y = f(y)`` and the built-in benchmarks."""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .elliptic import jacobi_ellipj
from .errors import InvalidParameterError

__all__ = [
    "SemiLinearIVP",
    "HamiltonianMeta",
    "ReferenceSolution",
    "canonical_J",
    "henon_heiles",
    "duffing",
    "sine_gordon",
    "linear_problem",
    "linear_henon_heiles",
    "energy",
    "get_problem",
    "PROBLEMS",
]


def canonical_J(d):
    """Canonical symplectic matrix ``[[0, I], [-I, 0]]`` of size ``2d``."""
    J = np.zeros((2 * d, 2 * d))
    J[:d, d:] = np.eye(d)
    J[d:, :d] = -np.eye(d)
    return J


@dataclass(frozen=True)
class HamiltonianMeta:
    hamiltonian: Callable[[np.ndarray], float]
    canonical_dim: int

    @property
    def J(self):
        return canonical_J(self.canonical_dim)


@dataclass(frozen=True)
class ReferenceSolution:
    """Exact callback or stored fine-grid trajectory.

    For ``kind == "fine-grid"`` the states are only available on ``times``;
    asking for any other time raises ``KeyError``.
    """

    kind: str
    t0: float
    exact: Optional[Callable[[float], np.ndarray]] = None
    times: Optional[np.ndarray] = None
    states: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def eval(self, t):
        if self.kind == "exact-callback":
            return np.asarray(self.exact(t), dtype=float)
        idx = np.flatnonzero(np.isclose(self.times, t, rtol=0.0, atol=1e-12 * max(1.0, abs(t))))
        if idx.size == 0:
            raise KeyError(f"time {t} is not on the stored reference grid")
        return self.states[idx[0]].copy()


@dataclass(frozen=True)
class SemiLinearIVP:
    """``y' + M y = f(y)``, ``y(t0) = y0``.

    ``jac_action(y, v)`` returns ``f'(y) v`` and ``hess_bilinear(y, u, v)``
    returns ``f''(y)(u, v)``.
    """

    name: str
    M: np.ndarray
    f: Callable[[np.ndarray], np.ndarray]
    jac_action: Callable[[np.ndarray, np.ndarray], np.ndarray]
    hess_bilinear: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    y0: np.ndarray
    t0: float = 0.0
    hamiltonian: Optional[HamiltonianMeta] = None
    reference: Optional[ReferenceSolution] = None
    params: dict = field(default_factory=dict)
    linear: bool = False

    @property
    def dim(self):
        return self.y0.shape[0]

    def rhs(self, y):
        """Full right-hand side ``g(y) = -M y + f(y)``."""
        return -self.M @ y + self.f(y)

    @classmethod
    def from_nonlinearity(cls, name, M, f, y0, t0=0.0, hamiltonian=None, eps=1e-5):
        """Build a problem whose derivative actions come from central differences of ``f``."""

        def jac_action(y, v):
            nv = np.linalg.norm(v)
            if nv == 0.0:
                return np.zeros_like(y)
            t = eps / nv
            return (f(y + t * v) - f(y - t * v)) / (2 * t)

        def hess_bilinear(y, u, v):
            nu, nv = np.linalg.norm(u), np.linalg.norm(v)
            if nu == 0.0 or nv == 0.0:
                return np.zeros_like(y)
            s, t = eps / nu, eps / nv
            return (f(y + s * u + t * v) - f(y + s * u - t * v)
                    - f(y - s * u + t * v) + f(y - s * u - t * v)) / (4 * s * t)

        return cls(name=name, M=np.asarray(M, dtype=float), f=f, jac_action=jac_action,
                   hess_bilinear=hess_bilinear, y0=np.asarray(y0, dtype=float), t0=t0,
                   hamiltonian=hamiltonian)


def energy(meta, y):
    """Total energy ``H(y)``."""
    y = np.asarray(y, dtype=float)
    if y.shape != (2 * meta.canonical_dim,):
        raise InvalidParameterError(
            f"state of shape {y.shape} does not match canonical dimension {meta.canonical_dim}")
    return float(meta.hamiltonian(y))


def _zero_f(y):
    return np.zeros_like(y)


def _zero_jac(y, v):
    return np.zeros_like(y)


def _zero_hess(y, u, v):
    return np.zeros_like(y)


def linear_problem(M, y0, t0=0.0, name="linear"):
    """The homogeneous problem ``y' + M y = 0``.

    When ``M`` has even size and ``J M`` is symmetric the quadratic energy
    ``-y^T J M y / 2`` is attached; it is conserved by the exact flow.
    """
    M = np.asarray(M, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    meta = None
    n = M.shape[0]
    if n % 2 == 0:
        J = canonical_J(n // 2)
        Q = J @ M
        if np.allclose(Q, Q.T, atol=1e-12):
            meta = HamiltonianMeta(lambda y, Q=Q: -0.5 * float(y @ Q @ y), n // 2)
    ref = ReferenceSolution(kind="exact-callback", t0=t0,
                            exact=lambda t: _linear_flow(M, y0, t - t0))
    return SemiLinearIVP(name=name, M=M, f=_zero_f, jac_action=_zero_jac,
                         hess_bilinear=_zero_hess, y0=y0, t0=t0, hamiltonian=meta,
                         reference=ref, linear=True)


def _linear_flow(M, y0, t):
    from .linalg import mat_exp
    return mat_exp(-t * M) @ y0


# --- Hénon-Heiles -----------------------------------------------------------

def _hh_f(y):
    x1, x2 = y[0], y[1]
    return np.array([0.0, 0.0, -2.0 * x1 * x2, -x1 * x1 + x2 * x2])


def _hh_jac(y, v):
    x1, x2 = y[0], y[1]
    return np.array([0.0, 0.0, -2.0 * (x2 * v[0] + x1 * v[1]), -2.0 * x1 * v[0] + 2.0 * x2 * v[1]])


def _hh_hess(y, u, v):
    return np.array([0.0, 0.0, -2.0 * (u[0] * v[1] + u[1] * v[0]), -2.0 * u[0] * v[0] + 2.0 * u[1] * v[1]])


def _hh_H(y):
    x1, x2, p1, p2 = y
    return 0.5 * (p1 * p1 + p2 * p2) + 0.5 * (x1 * x1 + x2 * x2) + x1 * x1 * x2 - x2**3 / 3.0


def henon_heiles():
    """Hénon-Heiles model, state ``(x1, x2, y1, y2)``."""
    M = np.array([[0.0, 0.0, -1.0, 0.0],
                  [0.0, 0.0, 0.0, -1.0],
                  [1.0, 0.0, 0.0, 0.0],
                  [0.0, 1.0, 0.0, 0.0]])
    y0 = np.array([np.sqrt(11.0 / 96.0), 0.0, 0.0, 0.25])
    return SemiLinearIVP(name="henon-heiles", M=M, f=_hh_f, jac_action=_hh_jac,
                         hess_bilinear=_hh_hess, y0=y0,
                         hamiltonian=HamiltonianMeta(_hh_H, 2))


# --- Duffing ----------------------------------------------------------------

def duffing(omega=30.0, k=0.01):
    """Duffing oscillator ``q'' + omega^2 q = k^2 (2 q^3 - q)``, state ``(p, q)``.

    The exact solution is ``q(t) = sn(omega t; k / omega)`` (modulus
    convention), so ``p(t) = omega cn dn``.
    """
    omega = float(omega)
    k = float(k)
    if not (0.0 <= k < omega):
        raise InvalidParameterError(f"need 0 <= k < omega, got k={k}, omega={omega}")
    k2 = k * k
    kappa = k / omega

    def f(y):
        q = y[1]
        return np.array([k2 * (2.0 * q**3 - q), 0.0])

    def jac(y, v):
        q = y[1]
        return np.array([k2 * (6.0 * q * q - 1.0) * v[1], 0.0])

    def hess(y, u, v):
        return np.array([12.0 * k2 * y[1] * u[1] * v[1], 0.0])

    def H(y):
        p, q = y
        return 0.5 * p * p + 0.5 * omega**2 * q * q + 0.5 * k2 * (q * q - q**4)

    def exact(t):
        sn, cn, dn = jacobi_ellipj(omega * t, kappa)
        return np.array([omega * cn * dn, sn])

    M = np.array([[0.0, omega**2], [-1.0, 0.0]])
    y0 = np.array([omega, 0.0])
    return SemiLinearIVP(name="duffing", M=M, f=f, jac_action=jac, hess_bilinear=hess,
                         y0=y0, hamiltonian=HamiltonianMeta(H, 1),
                         reference=ReferenceSolution(kind="exact-callback", t0=0.0, exact=exact),
                         params={"omega": omega, "k": k})


# --- sine-Gordon ------------------------------------------------------------

def periodic_laplacian(N, dx):
    """Periodic second-difference matrix ``tridiag(-1, 2, -1) / dx^2`` with corner wrap."""
    L = 2.0 * np.eye(N) - np.eye(N, k=1) - np.eye(N, k=-1)
    L[0, -1] -= 1.0
    L[-1, 0] -= 1.0
    return L / dx**2


def sine_gordon(N=48):
    """Semi-discrete periodic sine-Gordon equation on (-1, 1), state ``(U', U)``."""
    N = int(N)
    if N < 2:
        raise InvalidParameterError(f"need N >= 2 grid points, got {N}")
    dx = 2.0 / N
    L = periodic_laplacian(N, dx)
    M = np.zeros((2 * N, 2 * N))
    M[:N, N:] = L
    M[N:, :N] = -np.eye(N)

    def f(y):
        out = np.zeros_like(y)
        out[:N] = -np.sin(y[N:])
        return out

    def jac(y, v):
        out = np.zeros_like(y)
        out[:N] = -np.cos(y[N:]) * v[N:]
        return out

    def hess(y, u, v):
        out = np.zeros_like(y)
        out[:N] = np.sin(y[N:]) * u[N:] * v[N:]
        return out

    def H(y):
        V, U = y[:N], y[N:]
        return 0.5 * V @ V + 0.5 * U @ L @ U - np.sum(np.cos(U))

    i = np.arange(1, N + 1)
    y0 = np.concatenate([np.sqrt(N) * (0.01 + np.sin(2.0 * np.pi * i / N)), np.full(N, np.pi)])
    return SemiLinearIVP(name="sine-gordon", M=M, f=f, jac_action=jac, hess_bilinear=hess,
                         y0=y0, hamiltonian=HamiltonianMeta(H, N),
                         params={"N": N, "L": L, "dx": dx})


def linear_henon_heiles():
    """Hénon-Heiles linear part with ``f = 0``: an exactly solvable control problem."""
    hh = henon_heiles()
    return linear_problem(hh.M, hh.y0, name="linear")


PROBLEMS = {
    "henon-heiles": henon_heiles,
    "duffing": duffing,
    "sine-gordon": sine_gordon,
    "linear": linear_henon_heiles,
}


def get_problem(name, omega=None, k=None, n_grid=None):
    """Look up a built-in problem by name, applying parameter overrides."""
    if name == "henon-heiles":
        return henon_heiles()
    if name == "duffing":
        kw = {}
        if omega is not None:
            kw["omega"] = omega
        if k is not None:
            kw["k"] = k
        return duffing(**kw)
    if name == "sine-gordon":
        return sine_gordon(48 if n_grid is None else n_grid)
    if name == "linear":
        return linear_henon_heiles()
    raise InvalidParameterError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}")
