import numpy as np
import pytest

from magbloch.errors import DegenerateLevelError
from magbloch.fiber import assemble, build_grid, eigensolve, grid_per_cell
from magbloch.lattice import Lattice, make_flux
from magbloch.nodal import nodal_scan, nodal_scan_level
from magbloch.potential import PotentialSpec, random_potential


def test_synthetic_line_zero_is_one_curve(square, unit_flux):
    g = build_grid(square, unit_flux, 24, 24)
    s1 = np.arange(24)[:, None] * np.ones(24)[None, :]
    phi = np.sin(np.pi * s1 / 24)  # vanishes on the row s1 = 0
    rep = nodal_scan(phi.ravel(), g)
    assert len(rep.components) == 1
    comp = rep.components[0]
    assert comp.kind == "curve" and comp.size == 24 and comp.diameter == 24


def test_component_wraps_across_boundary(square, unit_flux):
    g = build_grid(square, unit_flux, 16, 16)
    phi = np.ones((16, 16))
    phi[0, 0] = phi[15, 15] = phi[0, 15] = 0.0
    rep = nodal_scan(phi.ravel(), g)
    assert len(rep.components) == 1 and rep.components[0].kind == "point"


def test_zero_field_ground_state_has_no_zeros(square):
    flux = make_flux(0, 1, square)
    g = grid_per_cell(square, flux, 16, 16)
    H = assemble(g, random_potential(square, 2, 2, 0.5), (0.21, 0.37))
    es = eigensolve(H, 3)
    assert nodal_scan_level(H, es, 0).empty


@pytest.mark.parametrize("p", [1, 2])
def test_magnetic_ground_state_has_p_point_zeros(square, p):
    # a section of the degree-p line bundle: p zeros per magnetic cell
    flux = make_flux(p, 1, square)
    g = grid_per_cell(square, flux, 24, 24)
    H = assemble(g, random_potential(square, 3, 2, 0.5), (0.2, 0.3))
    es = eigensolve(H, 4)
    rep = nodal_scan_level(H, es, 0, zero_tol=0.1)
    assert len(rep.components) == p
    assert all(c.kind == "point" for c in rep.components)


def test_gradient_flags_are_point_like_on_corpus():
    for lattice in (Lattice.square(), Lattice.triangular()):
        for p, seed in [(0, 0), (1, 1), (1, 2), (2, 3)]:
            flux = make_flux(p, 1, lattice)
            g = grid_per_cell(lattice, flux, 20, 20)
            H = assemble(g, random_potential(lattice, seed, 2, 0.5), (0.3, 0.1))
            es = eigensolve(H, 4)
            for n in range(3):
                if min(abs(es.eigenvalues[n] - es.eigenvalues[k]) for k in range(4) if k != n) < 1e-4:
                    continue
                rep = nodal_scan_level(H, es, n, zero_tol=0.1)
                for cells in rep.gradient_components():
                    assert len(cells) <= 9


def test_degenerate_level_refused(square):
    flux = make_flux(2, 1, square)
    g = grid_per_cell(square, flux, 8, 8)
    H = assemble(g, PotentialSpec.zero(square), (0, 0))
    es = eigensolve(H, 4)
    with pytest.raises(DegenerateLevelError):
        nodal_scan_level(H, es, 0)


def test_last_computed_level_refused(square, unit_flux):
    g = grid_per_cell(square, unit_flux, 8, 8)
    H = assemble(g, random_potential(square, 0, 2, 0.5), (0.1, 0.1))
    es = eigensolve(H, 2)
    with pytest.raises(DegenerateLevelError):
        nodal_scan_level(H, es, 1)
