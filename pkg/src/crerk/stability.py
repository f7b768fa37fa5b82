"""Amplification factors on the partitioned Dahlquist equation and |R| scans.

The test problem is ``y' = i lambda_1 y + i lambda_2 y`` with the first term
treated exponentially.  With ``h = 1`` this means ``h M = -i k1`` and
``h f(y) = i k2 y``.  Because ``f`` is linear every implicit stage system is
solved in closed form (1x1 or 2x2 Cramer), so no iteration is involved.
"""

import csv
from dataclasses import dataclass
from math import factorial

import numpy as np

from .errors import InvalidGridError
from .integrators import correction_from_actions
from .schemes import MVERK, PHI_ERK, SVERK, make_scheme, phi_tableau

__all__ = [
    "StabilityGrid",
    "amplification_factor",
    "stability_scan",
    "write_stability_csv",
    "parse_range",
    "DEFAULT_RANGE",
]

DEFAULT_RANGE = (-10.0, 10.0, 400)

# below this |det| a stage system is treated as singular
_SINGULAR_TOL = 1e-14


@dataclass(frozen=True)
class StabilityGrid:
    """|R| sampled on a Cartesian grid; ``magnitudes[j, i]`` belongs to ``(k1[i], k2[j])``."""

    scheme: str
    k1_range: tuple
    k2_range: tuple
    magnitudes: np.ndarray

    @property
    def k1(self):
        return np.linspace(*self.k1_range[:2], int(self.k1_range[2]))

    @property
    def k2(self):
        return np.linspace(*self.k2_range[:2], int(self.k2_range[2]))

    @property
    def stable_fraction(self):
        """Fraction of cells with ``|R| <= 1`` (up to a 1e-12 rounding margin)."""
        return float(np.mean(self.magnitudes <= 1.0 + 1e-12))


def _phi_scalar(z):
    """``phi_1(z)``, ``phi_2(z)`` for a complex array, with series near 0."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 0.5
    zs = np.where(small, 0.0, z)
    ez = np.exp(zs)
    with np.errstate(divide="ignore", invalid="ignore"):
        p1 = np.expm1(zs) / zs
        p2 = (ez - 1.0 - zs) / zs**2
    if np.any(small):
        zz = z[small]
        s1 = np.zeros_like(zz)
        s2 = np.zeros_like(zz)
        for j in range(18, -1, -1):
            s1 = s1 * zz + 1.0 / factorial(j + 1)
            s2 = s2 * zz + 1.0 / factorial(j + 2)
        p1 = np.where(small, 0.0, p1)
        p2 = np.where(small, 0.0, p2)
        p1[small] = s1
        p2[small] = s2
    return p1, p2


def _solve_stages(A, rhs):
    """Solve ``(I - A) Y = rhs`` elementwise for nested-list ``A`` of arrays.

    Returns the stage list and a mask of singular cells.
    """
    s = len(rhs)
    if s == 1:
        det = 1.0 - A[0][0]
        singular = np.abs(det) < _SINGULAR_TOL
        with np.errstate(divide="ignore", invalid="ignore"):
            return [rhs[0] / det], singular
    m11, m12 = 1.0 - A[0][0], -A[0][1]
    m21, m22 = -A[1][0], 1.0 - A[1][1]
    det = m11 * m22 - m12 * m21
    singular = np.abs(det) < _SINGULAR_TOL
    with np.errstate(divide="ignore", invalid="ignore"):
        y1 = (rhs[0] * m22 - m12 * rhs[1]) / det
        y2 = (m11 * rhs[1] - m21 * rhs[0]) / det
    return [y1, y2], singular


def _correction(scheme, k1, k2):
    if scheme.family == PHI_ERK or scheme.order == 1:
        return 0.0
    ik1, ik2 = 1j * k1, 1j * k2
    return correction_from_actions(
        scheme.family, scheme.order, 1.0,
        apply_M=lambda v: -ik1 * v,
        f0=ik2 + 0.0 * ik1,
        g0=ik1 + ik2,
        jac=lambda v: ik2 * v,
        hess=lambda u, v: 0.0 * u,
    )


def _amplification(scheme, k1, k2):
    k1 = np.asarray(k1, dtype=float)
    k2 = np.asarray(k2, dtype=float)
    k1, k2 = np.broadcast_arrays(k1, k2)
    ik2 = 1j * k2
    s = scheme.stage_count
    c = scheme.c
    e = np.exp(1j * k1)
    if scheme.family == SVERK:
        A = [[ik2 * scheme.A[i, j] for j in range(s)] for i in range(s)]
        Y, singular = _solve_stages(A, [np.exp(1j * c[i] * k1) for i in range(s)])
        R = e + sum(scheme.b[i] * ik2 * Y[i] for i in range(s)) + _correction(scheme, k1, k2)
    elif scheme.family == MVERK:
        lam = 1j * (k1 + k2)
        A = [[lam * scheme.A[i, j] for j in range(s)] for i in range(s)]
        Y, singular = _solve_stages(A, [np.ones_like(e) for _ in range(s)])
        R = e + sum(scheme.b[i] * ik2 * Y[i] for i in range(s)) + _correction(scheme, k1, k2)
    elif scheme.family == PHI_ERK:
        z = 1j * k1
        Q1, Q2 = _phi_scalar(z)
        P = [_phi_scalar(ci * z) for ci in c]
        Aphi, bphi = phi_tableau(scheme, [p[0] for p in P], [p[1] for p in P], Q1, Q2)
        if scheme.explicit:
            Y = [np.ones_like(e)]
            singular = np.zeros(e.shape, dtype=bool)
        else:
            A = [[ik2 * Aphi[i][j] for j in range(s)] for i in range(s)]
            Y, singular = _solve_stages(A, [np.exp(ci * z) for ci in c])
        R = e + sum(ik2 * bphi[i] * Y[i] for i in range(s))
    else:  # pragma: no cover - the catalogue only has three families
        raise ValueError(f"unknown family {scheme.family!r}")
    R = np.asarray(R, dtype=complex)
    bad = singular | ~np.isfinite(R)
    if np.any(bad):
        R = np.where(bad, complex(np.inf, 0.0), R)
    return R


def amplification_factor(scheme, k1, k2):
    """``R(i k1, i k2)``: one step of ``scheme`` from ``y0 = 1`` on the test problem.

    ``k1`` and ``k2`` may be arrays (broadcast together).  Scalar input gives
    a Python complex.  Singular stage systems yield ``inf``.
    """
    if isinstance(scheme, str):
        scheme = make_scheme(scheme)
    R = _amplification(scheme, k1, k2)
    return complex(R) if R.ndim == 0 else R


def _check_range(rng, label):
    lo, hi, n = rng
    n_int = int(n)
    if n_int != n or n_int < 2:
        raise InvalidGridError(f"{label}: need an integer count >= 2, got {n}")
    lo, hi = float(lo), float(hi)
    if not (np.isfinite(lo) and np.isfinite(hi)) or not lo < hi:
        raise InvalidGridError(f"{label}: need finite min < max, got {lo}, {hi}")
    return lo, hi, n_int


def parse_range(text):
    """Parse ``"min:max:n"`` into a range tuple."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise InvalidGridError(f"range must look like min:max:n, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise InvalidGridError(f"cannot parse range {text!r}: {exc}") from None
    return _check_range((lo, hi, n), "range")


def stability_scan(scheme, k1_range=DEFAULT_RANGE, k2_range=DEFAULT_RANGE):
    """Fill ``|R|`` over the grid ``linspace(*k1_range) x linspace(*k2_range)``."""
    if isinstance(scheme, str):
        scheme = make_scheme(scheme)
    k1_range = _check_range(k1_range, "k1")
    k2_range = _check_range(k2_range, "k2")
    k1 = np.linspace(*k1_range[:2], k1_range[2])
    k2 = np.linspace(*k2_range[:2], k2_range[2])
    K1, K2 = np.meshgrid(k1, k2)
    mags = np.abs(_amplification(scheme, K1, K2))
    return StabilityGrid(scheme=scheme.name, k1_range=k1_range, k2_range=k2_range, magnitudes=mags)


def write_stability_csv(grid, path):
    """Write ``k1,k2,absR`` rows in k2-major order with 17 significant digits."""
    k1, k2 = grid.k1, grid.k2
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k1", "k2", "absR"])
            for j, b in enumerate(k2):
                for i, a in enumerate(k1):
                    w.writerow([f"{a:.17g}", f"{b:.17g}", f"{grid.magnitudes[j, i]:.17g}"])
    except OSError as exc:
        raise OSError(f"cannot write stability grid to {path}: {exc}") from exc
    return path
