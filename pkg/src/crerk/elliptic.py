"""Jacobi elliptic functions by the descending Landen (AGM) transformation."""

import numpy as np

from .errors import InvalidParameterError

__all__ = ["jacobi_ellipj", "jacobi_sn"]


def jacobi_ellipj(u, modulus):
    """Return ``(sn, cn, dn)`` of ``u`` for the modulus ``k`` (parameter ``k**2``).

    ``u`` may be a scalar or an array.  The AGM sequence depends on the modulus
    only, so the backward phase recursion is vectorised over ``u``.
    """
    k = float(modulus)
    if not 0.0 <= k <= 1.0 or not np.isfinite(k):
        raise InvalidParameterError(f"modulus must lie in [0, 1], got {modulus!r}")
    u = np.asarray(u, dtype=float)
    if k == 0.0:
        return np.sin(u), np.cos(u), np.ones_like(u)
    if k == 1.0:
        sech = 1.0 / np.cosh(u)
        return np.tanh(u), sech, sech.copy()

    a = [1.0]
    c = [k]
    b = np.sqrt((1.0 - k) * (1.0 + k))
    while abs(c[-1]) > 1e-16 * a[-1] and len(a) < 64:
        a_prev = a[-1]
        a.append(0.5 * (a_prev + b))
        c.append(0.5 * (a_prev - b))
        b = np.sqrt(a_prev * b)
    n = len(a) - 1
    phi = 2.0**n * a[n] * u
    for j in range(n, 0, -1):
        phi = 0.5 * (phi + np.arcsin(c[j] / a[j] * np.sin(phi)))
    sn = np.sin(phi)
    cn = np.cos(phi)
    dn = np.sqrt(1.0 - (k * sn) ** 2)
    return sn, cn, dn


def jacobi_sn(u, modulus):
    """Jacobi ``sn(u; k)`` with modulus ``k`` in [0, 1]."""
    return jacobi_ellipj(u, modulus)[0]
