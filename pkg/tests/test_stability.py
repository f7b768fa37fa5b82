import csv
import time

import numpy as np
import pytest

from crerk.errors import InvalidGridError
from crerk.integrators import SolveOptions, Stepper
from crerk.problems import SemiLinearIVP
from crerk.schemes import SCHEME_NAMES
from crerk.stability import (DEFAULT_RANGE, amplification_factor, parse_range, stability_scan,
                             write_stability_csv)

from oracles import complex_as_real

IMPLICIT = [n for n in SCHEME_NAMES if n != "eeuler"]
ORDER2 = ["imsverk12", "immverk12", "imerk12"]


def brute_force_R(name, k1, k2):
    """One step of the real-matrix machinery on the 2x2 embedding of the scalar problem."""
    M = complex_as_real(-1j * k1)
    F = complex_as_real(1j * k2)
    prob = SemiLinearIVP("dahlquist", M, lambda y: F @ y, lambda y, v: F @ v,
                         lambda y, u, v: np.zeros(2), np.array([1.0, 0.0]))
    y1, _ = Stepper(name, prob, 1.0, SolveOptions(max_iter=400)).step(prob.y0)
    return complex(y1[0], y1[1])


@pytest.mark.parametrize("name", SCHEME_NAMES)
def test_identity_at_origin(name):
    assert abs(amplification_factor(name, 0.0, 0.0) - 1.0) <= 1e-15


@pytest.mark.parametrize("name", SCHEME_NAMES)
def test_linear_part_is_exact(name):
    k1 = np.linspace(-10.0, 10.0, 100)
    R = amplification_factor(name, k1, 0.0)
    np.testing.assert_allclose(R, np.exp(1j * k1), atol=1e-13)
    assert np.max(np.abs(np.abs(R) - 1.0)) <= 1e-12


@pytest.mark.parametrize("name", ORDER2)
def test_order_two_unitary_on_k2_axis(name):
    k2 = np.linspace(-10.0, 10.0, 100)
    R = amplification_factor(name, 0.0, k2)
    assert np.max(np.abs(np.abs(R) - 1.0)) <= 1e-12


def test_imsverk12_cayley_form():
    for k2 in (-3.0, 0.4, 7.5):
        expected = (1 + 0.5j * k2) / (1 - 0.5j * k2)
        assert abs(amplification_factor("imsverk12", 0.0, k2) - expected) <= 1e-15


def test_second_order_correction_contribution():
    # with k2 small the w2 term -k1 k2 / 2 is the difference between the two families' first-order parts
    k1, k2 = 0.8, 0.3
    R = amplification_factor("immverk12", k1, k2)
    lam = 1j * (k1 + k2)
    expected = np.exp(1j * k1) + 1j * k2 / (1 - 0.5 * lam) - k1 * k2 / 2
    assert abs(R - expected) <= 1e-15


@pytest.mark.parametrize("name", SCHEME_NAMES)
def test_conjugate_symmetry(name):
    rng = np.random.default_rng(0)
    k1, k2 = rng.uniform(-10, 10, 50), rng.uniform(-10, 10, 50)
    np.testing.assert_allclose(amplification_factor(name, -k1, -k2),
                               np.conj(amplification_factor(name, k1, k2)), rtol=1e-13, atol=1e-13)


@pytest.mark.parametrize("name", SCHEME_NAMES)
def test_matches_brute_force(name):
    # window where the plain fixed-point stage iteration contracts for every scheme
    k1s = np.linspace(-3.0, 3.0, 20)
    k2s = np.linspace(-0.9, 0.9, 20)
    worst = max(abs(amplification_factor(name, a, b) - brute_force_R(name, a, b))
                for a in k1s for b in k2s)
    assert worst <= 1e-12


def test_scalar_and_vector_inputs():
    assert isinstance(amplification_factor("imerk24", 1.0, 2.0), complex)
    R = amplification_factor("imerk24", np.array([1.0, 2.0]), 0.5)
    assert R.shape == (2,)


def test_singular_stage_is_flagged():
    # phi_1(i pi) = 2i / pi, so the imeeuler stage denominator 1 - i k2 phi_1(i k1) vanishes
    assert amplification_factor("imeeuler", np.pi, -np.pi / 2) == complex(np.inf, 0.0)
    grid = stability_scan("imeeuler", (np.pi - 1.0, np.pi + 1.0, 3), (-np.pi / 2 - 1.0, -np.pi / 2 + 1.0, 3))
    assert np.isinf(grid.magnitudes[1, 1]) and np.isfinite(np.delete(grid.magnitudes.ravel(), 4)).all()


@pytest.mark.parametrize("name", IMPLICIT)
def test_default_scan_is_fast_and_nontrivial(name):
    start = time.perf_counter()
    grid = stability_scan(name)
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    assert grid.magnitudes.shape == (400, 400)
    assert np.all(np.isfinite(grid.magnitudes)) and np.all(grid.magnitudes >= 0)
    assert np.any(grid.magnitudes <= 1.0)
    np.testing.assert_allclose(grid.magnitudes, grid.magnitudes[::-1, ::-1], rtol=1e-12)


def test_scan_rows_are_k2_major():
    grid = stability_scan("immverk24", (-10.0, 10.0, 5), (-1.0, 1.0, 3))
    assert grid.magnitudes.shape == (3, 5)
    np.testing.assert_allclose(grid.magnitudes[1], 1.0, atol=1e-12)
    np.testing.assert_allclose(grid.magnitudes[2, 3],
                               abs(amplification_factor("immverk24", grid.k1[3], grid.k2[2])))


def test_immverk24_region_contains_k2_zero_band():
    grid = stability_scan("immverk24", (-10.0, 10.0, 400), (-10.0, 10.0, 401))
    assert grid.k2[200] == 0.0
    assert np.all(grid.magnitudes[200] <= 1.0 + 1e-12)


def test_imerk12_column_at_k1_zero():
    grid = stability_scan("imerk12", (-1.0, 1.0, 3), DEFAULT_RANGE)
    np.testing.assert_allclose(grid.magnitudes[:, 1], 1.0, atol=1e-12)


def test_csv_output(tmp_path):
    grid = stability_scan("imsverk12", (-1.0, 1.0, 3), (0.0, 2.0, 2))
    path = write_stability_csv(grid, tmp_path / "r.csv")
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["k1", "k2", "absR"]
    assert len(rows) == 7
    assert [r[:2] for r in rows[1:4]] == [["-1", "0"], ["0", "0"], ["1", "0"]]
    assert rows[4][1] == "2"
    assert float(rows[6][2]) == grid.magnitudes[1, 2]
    assert open(path).read() == open(write_stability_csv(grid, tmp_path / "s.csv")).read()


def test_range_parsing():
    assert parse_range("-10:10:400") == (-10.0, 10.0, 400)
    for bad in ("1:2", "a:1:3", "0:1:1", "2:1:5", "0:inf:5"):
        with pytest.raises(InvalidGridError):
            parse_range(bad)
    with pytest.raises(InvalidGridError):
        stability_scan("imsverk1", (0.0, 1.0, 1))
