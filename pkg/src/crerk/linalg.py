"""Dense matrix exponential, phi-functions and a Krylov exp-times-vector path.

All routines work on real ``numpy`` arrays.  The matrix exponential uses
scaling and squaring with a diagonal Padé approximant (degrees 3 to 13, chosen
from the usual 1-norm backward error thresholds).  ``phi_1`` and ``phi_2`` are
read off the exponential of an augmented block matrix, which avoids the
cancellation of the textbook recurrence for small arguments.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import factorial

import numpy as np

from .errors import ExpmOverflowError, InvalidInputError, UnsupportedOrderError

__all__ = [
    "mat_exp",
    "phi_mat",
    "phi_functions",
    "krylov_apply",
    "KrylovInfo",
    "DENSE_THRESHOLD",
]

DENSE_THRESHOLD = 64
DEFAULT_SUBSPACE_DIM = 30
# the a-posteriori Krylov estimate can be optimistic by several times
KRYLOV_SAFETY = 0.1

# 1-norm bounds below which the [m/m] Padé approximant meets unit roundoff.
_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}


def _pade_coefficients(m):
    coeffs = []
    for j in range(m + 1):
        c = Fraction(factorial(2 * m - j) * factorial(m),
                     factorial(2 * m) * factorial(j) * factorial(m - j))
        coeffs.append(float(c))
    return coeffs


_PADE = {m: _pade_coefficients(m) for m in _THETA}


def _as_square(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise InvalidInputError(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("matrix has non-finite entries")
    return A


def _pade(A, m):
    n = A.shape[0]
    c = _PADE[m]
    ident = np.eye(n)
    A2 = A @ A
    # Horner in A^2 for the even (V) and odd (U) parts.
    even = c[0::2]
    odd = c[1::2]
    V = even[-1] * ident
    for coef in reversed(even[:-1]):
        V = A2 @ V + coef * ident
    W = odd[-1] * ident
    for coef in reversed(odd[:-1]):
        W = A2 @ W + coef * ident
    U = A @ W
    return np.linalg.solve(V - U, V + U)


def mat_exp(A):
    """Return ``exp(A)`` for a real square matrix.

    Raises
    ------
    InvalidInputError
        If ``A`` is not square or has non-finite entries.
    ExpmOverflowError
        If the result overflows while squaring.
    """
    A = _as_square(A)
    norm = np.linalg.norm(A, 1)
    if norm == 0.0:
        return np.eye(A.shape[0])
    for m in (3, 5, 7, 9):
        if norm <= _THETA[m]:
            return _pade(A, m)
    s = max(0, int(np.ceil(np.log2(norm / _THETA[13]))))
    X = _pade(A / 2.0**s, 13)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(s):
            X = X @ X
            if not np.all(np.isfinite(X)):
                raise ExpmOverflowError(
                    f"matrix exponential overflowed during squaring (||A||_1 = {norm:.3g})")
    return X


def phi_functions(A):
    """Return ``(exp(A), phi_1(A), phi_2(A))`` from one exponential.

    The exponential of the block matrix ``[[A, I, 0], [0, 0, I], [0, 0, 0]]``
    carries ``phi_1(A)`` and ``phi_2(A)`` in its first block row.
    """
    A = _as_square(A)
    n = A.shape[0]
    B = np.zeros((3 * n, 3 * n))
    B[:n, :n] = A
    B[:n, n:2 * n] = np.eye(n)
    B[n:2 * n, 2 * n:] = np.eye(n)
    E = mat_exp(B)
    return E[:n, :n], E[:n, n:2 * n], E[:n, 2 * n:]


def phi_mat(k, A):
    """Return ``phi_k(A)`` for ``k`` in {1, 2}.

    ``phi_k(z) = int_0^1 exp((1 - t) z) t^(k-1) / (k-1)! dt``; the caller passes
    the already scaled argument (for instance ``-c h M``).
    """
    if k not in (1, 2):
        raise UnsupportedOrderError(f"phi_{k} is not supported (k must be 1 or 2)")
    _, phi1, phi2 = phi_functions(A)
    return phi1 if k == 1 else phi2


@dataclass(frozen=True)
class KrylovInfo:
    """Diagnostics of a :func:`krylov_apply` call."""

    dense: bool
    subspace_dim: int
    error_estimate: float
    breakdown: bool
    converged: bool


def krylov_apply(A, v, kind="exp", subspace_dim=None, tol=1e-12,
                 dense_threshold=DENSE_THRESHOLD, full_output=False):
    """Approximate ``exp(A) v`` or ``phi_1(A) v`` in a Krylov subspace.

    Arnoldi with full (twice-iterated) Gram-Schmidt builds the basis one vector
    at a time.  After each new vector the a-posteriori estimate
    ``beta * h[m, m-1] * |e_m^T phi_{j+1}(H_m) e_1|`` is compared with ``tol``;
    ``j`` is 0 for ``exp`` and 1 for ``phi1``; iteration stops once it falls
    below ``KRYLOV_SAFETY * tol``.  A zero new basis vector
    (lucky breakdown) means the small-space result is exact.

    Matrices with ``n <= dense_threshold`` go straight to the dense path.
    ``subspace_dim`` defaults to ``min(30, n)``.
    """
    if kind not in ("exp", "phi1"):
        raise InvalidInputError(f"unknown kind {kind!r}; expected 'exp' or 'phi1'")
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    A = _as_square(A)
    v = np.asarray(v, dtype=float)
    n = A.shape[0]
    if v.shape != (n,):
        raise InvalidInputError(f"vector of shape {v.shape} does not match matrix of size {n}")
    if subspace_dim is None:
        subspace_dim = min(DEFAULT_SUBSPACE_DIM, n)
    if not 1 <= subspace_dim <= n:
        raise InvalidInputError(f"subspace_dim must lie in [1, {n}], got {subspace_dim}")

    def _done(y, info):
        return (y, info) if full_output else y

    if n <= dense_threshold:
        if kind == "exp":
            y = mat_exp(A) @ v
        else:
            y = phi_mat(1, A) @ v
        return _done(y, KrylovInfo(True, n, 0.0, False, True))

    beta = np.linalg.norm(v)
    if beta == 0.0:
        return _done(np.zeros(n), KrylovInfo(False, 0, 0.0, True, True))

    V = np.zeros((n, subspace_dim + 1))
    H = np.zeros((subspace_dim + 1, subspace_dim))
    V[:, 0] = v / beta
    breakdown = False
    estimate = np.inf
    m = 0
    for j in range(subspace_dim):
        w = A @ V[:, j]
        for _ in range(2):
            coeffs = V[:, :j + 1].T @ w
            w = w - V[:, :j + 1] @ coeffs
            H[:j + 1, j] += coeffs
        h_next = np.linalg.norm(w)
        m = j + 1
        if h_next <= 1e-14 * max(1.0, np.linalg.norm(H[:m, :m], 1)):
            breakdown = True
            estimate = 0.0
            break
        H[m, j] = h_next
        V[:, m] = w / h_next
        Hm = H[:m, :m]
        _, p1, p2 = phi_functions(Hm)
        tail = p1[m - 1, 0] if kind == "exp" else p2[m - 1, 0]
        estimate = beta * h_next * abs(tail)
        if estimate <= KRYLOV_SAFETY * tol:
            break

    Hm = H[:m, :m]
    E, p1, _ = phi_functions(Hm)
    small = E[:, 0] if kind == "exp" else p1[:, 0]
    y = beta * (V[:, :m] @ small)
    info = KrylovInfo(False, m, float(estimate), breakdown,
                      breakdown or estimate <= KRYLOV_SAFETY * tol)
    return _done(y, info)
