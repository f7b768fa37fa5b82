"""Catalogue of the nine exponential Runge-Kutta schemes."""

from dataclasses import dataclass

import numpy as np

from .errors import UnknownMethodError

__all__ = ["ERKScheme", "make_scheme", "SCHEME_NAMES", "SVERK", "MVERK", "PHI_ERK"]

SVERK = "SVERK"
MVERK = "MVERK"
PHI_ERK = "PHI_ERK"

_S3 = np.sqrt(3.0)
GAUSS_C = np.array([0.5 - _S3 / 6.0, 0.5 + _S3 / 6.0])
GAUSS_A = np.array([[0.25, (3.0 - 2.0 * _S3) / 12.0],
                    [(3.0 + 2.0 * _S3) / 12.0, 0.25]])
GAUSS_B = np.array([0.5, 0.5])


@dataclass(frozen=True, eq=False)
class ERKScheme:
    """Coefficients of one scheme.

    For the ``PHI_ERK`` family ``A`` and ``b`` hold the values of the
    phi-valued weights at ``M = 0`` and ``phi_weights`` is set; the actual
    matrices are built per ``(h, M)`` by the stepper.
    """

    name: str
    family: str
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    order: int
    phi_weights: bool = False
    explicit: bool = False

    @property
    def stage_count(self):
        return self.b.shape[0]

    def __repr__(self):
        return f"ERKScheme({self.name!r}, family={self.family}, order={self.order}, s={self.stage_count})"


def _scheme(name, family, A, b, c, order, **kw):
    return ERKScheme(name, family, np.array(A, dtype=float), np.array(b, dtype=float),
                     np.array(c, dtype=float), order, **kw)


_CATALOGUE = {
    # first order
    "imsverk1": lambda: _scheme("imsverk1", SVERK, [[0.5]], [1.0], [1.0], 1),
    "eeuler": lambda: _scheme("eeuler", PHI_ERK, [[0.0]], [1.0], [0.0], 1,
                              phi_weights=True, explicit=True),
    "imeeuler": lambda: _scheme("imeeuler", PHI_ERK, [[1.0]], [1.0], [1.0], 1, phi_weights=True),
    # second order
    "imsverk12": lambda: _scheme("imsverk12", SVERK, [[0.5]], [1.0], [0.5], 2),
    "immverk12": lambda: _scheme("immverk12", MVERK, [[0.5]], [1.0], [0.5], 2),
    "imerk12": lambda: _scheme("imerk12", PHI_ERK, [[0.5]], [1.0], [0.5], 2, phi_weights=True),
    # fourth order
    "imsverk24": lambda: _scheme("imsverk24", SVERK, GAUSS_A, GAUSS_B, GAUSS_C, 4),
    "immverk24": lambda: _scheme("immverk24", MVERK, GAUSS_A, GAUSS_B, GAUSS_C, 4),
    "imerk24": lambda: _scheme("imerk24", PHI_ERK, GAUSS_A, GAUSS_B, GAUSS_C, 4, phi_weights=True),
}

SCHEME_NAMES = tuple(_CATALOGUE)


def make_scheme(name):
    """Return the catalogued scheme called ``name`` (case-insensitive)."""
    key = str(name).lower()
    try:
        return _CATALOGUE[key]()
    except KeyError:
        raise UnknownMethodError(
            f"unknown method {name!r}; available: {', '.join(SCHEME_NAMES)}") from None


def phi_tableau(scheme, P1, P2, Q1, Q2):
    """Phi-valued stage matrix and weights of a ``PHI_ERK`` scheme.

    ``P1[i]``, ``P2[i]`` are ``phi_1``, ``phi_2`` at ``c_i z`` and ``Q1``, ``Q2``
    at ``z`` (``z = -h M``).  The entries may be matrices or complex arrays;
    returns ``(A, b)`` as nested lists.
    """
    name = scheme.name
    if name == "eeuler":
        return [[0.0 * Q1]], [Q1]
    if name == "imeeuler":
        return [[Q1]], [Q1]
    if name == "imerk12":
        return [[0.5 * P1[0]]], [Q1]
    if name == "imerk24":
        c1, c2 = scheme.c
        A = [
            [_S3 / 6.0 * P1[0] - _S3 * c1**2 * P2[0], -_S3 * c1**2 * P1[0] + _S3 * c1**2 * P2[0]],
            [_S3 * c2**2 * P1[1] - _S3 * c2**2 * P2[1], -_S3 / 6.0 * P1[1] + _S3 * c2**2 * P2[1]],
        ]
        b = [_S3 * c2 * Q1 - _S3 * Q2, -_S3 * c1 * Q1 + _S3 * Q2]
        return A, b
    raise UnknownMethodError(f"{name!r} has no phi-valued tableau")
