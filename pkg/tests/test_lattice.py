from math import pi, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magbloch.errors import DegenerateLatticeError, NotRationalError
from magbloch.lattice import (
    GammaPrimeVector,
    Lattice,
    SublatticePrime,
    commutation_phase,
    detect_flux,
    dual_basis,
    magnetic_translate,
    make_flux,
    theta_phase,
    weyl_translate,
    wedge,
)
from oracles import smallest_denominator_scan, weyl_translate_reference

coord = st.floats(-5, 5, allow_nan=False)
vec = st.tuples(coord, coord)


def gaussian(x):
    x = np.asarray(x, float)
    return np.exp(-np.sum(x * x, axis=-1))


def test_signed_area_and_degenerate():
    assert Lattice((0.0, 1.0), (1.0, 0.0)).cell_area == -1.0
    with pytest.raises(DegenerateLatticeError):
        Lattice((1.0, 2.0), (2.0, 4.0))


@pytest.mark.parametrize("p, q, B, reduced", [
    (1, 1, 2 * pi, (1, 1)),
    (3, 2, 3 * pi, (3, 2)),
    (2, 4, pi, (1, 2)),
])
def test_make_flux(square, p, q, B, reduced):
    flux = make_flux(p, q, square)
    assert (flux.p, flux.q) == reduced
    assert flux.B == pytest.approx(B, rel=1e-15)


def test_flux_through_magnetic_cell(triangular):
    flux = make_flux(2, 3, triangular)
    sub = flux.sublattice()
    assert flux.B * sub.cell_area == pytest.approx(2 * pi * 2, rel=1e-14)


def test_detect_flux(square):
    f = detect_flux(2 * pi * 0.5, square, qmax=10)
    assert (f.p, f.q) == (1, 2)
    f = detect_flux(2 * pi * (1 / 3 + 1e-15), square, qmax=10, tol=1e-9)
    assert (f.p, f.q) == (1, 3)


def test_detect_flux_irrational(square):
    ratio = sqrt(2) / 2
    assert smallest_denominator_scan(ratio, 50, 1e-9) is None
    with pytest.raises(NotRationalError):
        detect_flux(2 * pi * ratio, square, qmax=50, tol=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.floats(-3, 3, allow_nan=False), st.integers(1, 30))
def test_detect_flux_matches_scan(ratio, qmax):
    lattice = Lattice.square()
    expected = smallest_denominator_scan(ratio, qmax, 1e-3)
    if expected is None:
        with pytest.raises(NotRationalError):
            detect_flux(2 * pi * ratio, lattice, qmax, tol=1e-3)
    else:
        f = detect_flux(2 * pi * ratio, lattice, qmax, tol=1e-3)
        assert (f.p, f.q) == expected


def test_commutation_phase_examples(square):
    flux = make_flux(2, 3, square)
    assert commutation_phase(square.e1, square.e2, flux.B) == pytest.approx(np.exp(2j * pi * 2 / 3))
    assert commutation_phase((0.3, 0.7), (0.3, 0.7), 5.0) == 1
    qe1 = flux.q * np.array(square.e1)
    assert abs(commutation_phase(qe1, square.e2, flux.B) - 1) < 1e-14


@settings(max_examples=300, deadline=None)
@given(vec, vec, st.floats(-20, 20, allow_nan=False))
def test_commutation_antisymmetry(a, b, B):
    assert abs(commutation_phase(a, b, B) * commutation_phase(b, a, B) - 1) < 1e-12
    assert abs(abs(commutation_phase(a, b, B)) - 1) < 1e-12


def test_theta_phase_examples():
    assert theta_phase(GammaPrimeVector(1, 1), 1) == -1
    assert theta_phase(GammaPrimeVector(0, 7), 3) == 1
    assert theta_phase(GammaPrimeVector(2, 3), 1) == 1


@given(st.integers(-50, 50), st.integers(-50, 50), st.integers(-7, 7))
def test_theta_phase_is_exact_sign(g1, g2, p):
    assert theta_phase(GammaPrimeVector(g1, g2), p) == round(np.cos(pi * p * g1 * g2))


def test_magnetic_translate_examples():
    x = np.array([[0.0, 1.0]])
    out = magnetic_translate(gaussian, (1.0, 0.0), 2 * pi)(x)
    assert out[0] == pytest.approx(-np.exp(-2.0), abs=1e-15)
    pts = np.random.default_rng(0).normal(size=(20, 2))
    assert np.allclose(magnetic_translate(gaussian, (0.0, 0.0), 3.0)(pts), gaussian(pts), atol=0)


def test_magnetic_translation_composition():
    rng = np.random.default_rng(1)
    x = rng.uniform(-1, 1, size=(100, 2))
    a, b, B = np.array([0.4, -0.2]), np.array([0.1, 0.5]), 2.7
    lhs = magnetic_translate(magnetic_translate(gaussian, b, B), a, B)(x)
    rhs = np.exp(1j * B * wedge(a, b)) * magnetic_translate(magnetic_translate(gaussian, a, B), b, B)(x)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12


@pytest.mark.parametrize("p, q", [(1, 1), (1, 2), (2, 3), (-1, 3)])
@pytest.mark.parametrize("g, h", [((1, 0), (0, 1)), ((1, 1), (1, 1)), ((-1, 2), (1, -1))])
def test_weyl_group_law(triangular, p, q, g, h):
    flux = make_flux(p, q, triangular)
    x = np.random.default_rng(2).uniform(-1, 1, size=(100, 2))
    G, Hv = GammaPrimeVector(*g), GammaPrimeVector(*h)
    f = magnetic_translate(gaussian, -(G + Hv).vector(flux), flux.B)
    lhs = weyl_translate(weyl_translate(f, Hv, flux), G, flux)(x)
    rhs = weyl_translate(f, G + Hv, flux)(x)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12
    ref = weyl_translate_reference(f, *g, flux.p, flux.q, triangular.e1, triangular.e2, x)
    assert np.max(np.abs(weyl_translate(f, G, flux)(x) - ref)) <= 1e-12


def test_weyl_identity(square):
    flux = make_flux(1, 2, square)
    x = np.random.default_rng(3).normal(size=(10, 2))
    assert np.array_equal(weyl_translate(gaussian, GammaPrimeVector(0, 0), flux)(x), gaussian(x))


def test_dual_basis_examples():
    f1, f2 = dual_basis(SublatticePrime((2.0, 0.0), (0.0, 1.0)))
    assert np.allclose(f1, [pi, 0]) and np.allclose(f2, [0, 2 * pi])
    f1, f2 = dual_basis(SublatticePrime((1.0, 0.0), (0.5, sqrt(3) / 2)))
    assert np.allclose(f1, 2 * pi * np.array([1, -1 / sqrt(3)]), rtol=1e-14)
    assert np.allclose(f2, 2 * pi * np.array([0, 2 / sqrt(3)]), rtol=1e-14)


def test_dual_basis_degenerate():
    with pytest.raises(DegenerateLatticeError):
        dual_basis(SublatticePrime((1.0, 1.0), (2.0, 2.0)))


def test_dual_basis_random_lattices():
    rng = np.random.default_rng(4)
    checked = 0
    while checked < 1000:
        u1, u2 = rng.normal(size=(2, 2))
        if abs(wedge(u1, u2)) < 1e-3:
            continue
        f1, f2 = dual_basis(SublatticePrime(tuple(u1), tuple(u2)))
        F, U = np.array([f1, f2]), np.array([u1, u2])
        assert np.max(np.abs(F @ U.T / (2 * pi) - np.eye(2))) <= 1e-12 * max(1, np.abs(F).max() * np.abs(U).max())
        checked += 1
