import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magbloch.errors import InvalidPotentialError
from magbloch.lattice import Lattice
from magbloch.potential import (
    PotentialSpec,
    cell_points,
    cosine_potential,
    evaluate,
    random_potential,
    sup_norm,
)


def series(V, x):
    """Term-by-term evaluation, independent of the vectorized path."""
    b1, b2 = V.lattice.dual_basis()
    total = 0j
    for m1, m2, c in V.modes:
        K = m1 * b1 + m2 * b2
        total += c * np.exp(1j * (K[0] * x[0] + K[1] * x[1]))
    return total


def test_constant(square):
    V = PotentialSpec.constant(square, 2.0)
    assert np.allclose(evaluate(V, np.random.default_rng(0).normal(size=(5, 2))), 2.0)


def test_cosine_values(square):
    V = PotentialSpec(square, ((1, 0, 1.0), (-1, 0, 1.0)))
    assert evaluate(V, (0.0, 0.0)) == pytest.approx(2.0)
    assert evaluate(V, (0.5, 0.0)) == pytest.approx(-2.0)


def test_asymmetric_modes_rejected(square):
    V = PotentialSpec(square, ((1, 0, 1.0),))
    with pytest.raises(InvalidPotentialError):
        evaluate(V, (0.0, 0.0))


def test_periodicity_against_series(triangular):
    V = random_potential(triangular, 7, 3, 1.3)
    rng = np.random.default_rng(1)
    e1, e2 = np.array(triangular.e1), np.array(triangular.e2)
    for _ in range(100):
        x = rng.uniform(-3, 3, size=2)
        n1, n2 = rng.integers(-5, 6, size=2)
        gamma = n1 * e1 + n2 * e2
        v = evaluate(V, x)
        assert abs(v - series(V, x).real) <= 1e-10
        assert abs(evaluate(V, x + gamma) - v) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3), st.floats(0, 3))
def test_random_potential_bounds(seed, harmonic, amplitude):
    lattice = Lattice.square()
    V = random_potential(lattice, seed, harmonic, amplitude)
    assert V.is_conjugate_symmetric()
    assert all(abs(m1) <= harmonic and abs(m2) <= harmonic for m1, m2, _ in V.modes)
    assert V.coefficient_l1() <= amplitude * (1 + 1e-12)
    assert sup_norm(V, 100) <= V.coefficient_l1() + 1e-12


def test_random_potential_deterministic(square):
    assert random_potential(square, 3, 2, 0.5).modes == random_potential(square, 3, 2, 0.5).modes
    assert random_potential(square, 3, 2, 0.5).modes != random_potential(square, 4, 2, 0.5).modes
    assert random_potential(square, 3, 2, 0.0).modes == ()


def test_sup_norm_examples(square, triangular):
    assert sup_norm(PotentialSpec.constant(square, 2.0), 8) == pytest.approx(2.0)
    assert sup_norm(PotentialSpec.zero(square), 8) == 0.0
    # oblique cell, cosine along the b2 direction
    assert sup_norm(cosine_potential(triangular, 1.0, (0, 1)), 64) == pytest.approx(1.0, abs=1e-3)
    assert sup_norm(cosine_potential(square, 1.0, (1, 1)), 64) == pytest.approx(1.0, abs=1e-3)


def test_sup_norm_nested_monotone(square):
    V = random_potential(square, 11, 3, 1.0)
    values = [sup_norm(V, n) for n in (4, 8, 16, 32, 64)]
    assert all(a <= b + 1e-15 for a, b in zip(values, values[1:]))


def test_sup_norm_triangle_inequality(square):
    V0 = random_potential(square, 1, 2, 1.0)
    U = random_potential(square, 2, 2, 1.0)
    for t in (-0.7, 0.1, 2.0):
        lhs = sup_norm(V0 + U.scaled(t), 64)
        rhs = sup_norm(V0, 64) + abs(t) * sup_norm(U, 64)
        # grid error: sampled sup of each term may undershoot the true sup
        grid_err = 0.05 * (V0.coefficient_l1() + abs(t) * U.coefficient_l1())
        assert lhs <= rhs + grid_err


def test_cell_points_shape(triangular):
    pts = cell_points(triangular, 4, 3)
    assert pts.shape == (4, 3, 2)
    assert np.allclose(pts[1, 0], np.array(triangular.e1) / 4)
