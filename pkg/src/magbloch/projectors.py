"""Spectral projectors, Gram orthonormalization and reduced matrices.

Two independent routes to the same projector: summing eigenvector outer
products, and trapezoidal quadrature of the resolvent around a circle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ContinuationLostError, ContourError, DegenerateLevelError
from .fiber import EigenSolution, FiberOperator, Grid, potential_on_grid
from .potential import PotentialSpec

CONTOUR_GUARD = 1e-9
RESOLVENT_GUARD = 1e-6
GRAM_FLOOR = 1e-8


@dataclass(frozen=True, eq=False)
class SpectralProjector:
    center: float
    radius: float
    rank: int
    matrix: np.ndarray

    def apply(self, vectors: np.ndarray) -> np.ndarray:
        return self.matrix @ vectors


def _dense(H) -> np.ndarray:
    if isinstance(H, FiberOperator):
        return H.dense()
    if sp.issparse(H):
        return H.toarray()
    return np.asarray(H, dtype=complex)


def riesz_projector(es: EigenSolution, center: float, radius: float) -> SpectralProjector:
    """Projector onto the eigenvectors whose eigenvalues lie inside the disk."""
    lam = es.eigenvalues
    dist = np.abs(np.abs(lam - center) - radius)
    if np.any(dist <= CONTOUR_GUARD):
        raise ContourError(f"eigenvalue within {CONTOUR_GUARD} of |z - {center}| = {radius}")
    if not es.complete and center + radius >= lam[-1]:
        raise ValueError("disk reaches past the highest computed eigenvalue; solve for more states")
    inside = np.abs(lam - center) < radius
    v = es.eigenvectors[:, inside]
    return SpectralProjector(center, radius, int(inside.sum()), v @ v.conj().T)


def _negative_count(A: np.ndarray) -> int:
    """Number of negative eigenvalues of a Hermitian matrix (Sylvester inertia)."""
    _, d, _ = scipy.linalg.ldl(A, hermitian=True)
    # d is block diagonal with 1x1 and 2x2 blocks
    count, i, n = 0, 0, len(d)
    while i < n:
        if i + 1 < n and d[i + 1, i] != 0:
            count += int(np.sum(np.linalg.eigvalsh(d[i:i + 2, i:i + 2]) < 0))
            i += 2
        else:
            count += int(d[i, i].real < 0)
            i += 1
    return count


def _check_contour(A: np.ndarray, center: float, radius: float) -> int:
    """Raise if an eigenvalue is within RESOLVENT_GUARD of the contour; return the count inside."""
    eye = np.eye(len(A))
    for s in (center - radius, center + radius):
        below = _negative_count(A - (s - RESOLVENT_GUARD) * eye)
        above = _negative_count(A - (s + RESOLVENT_GUARD) * eye)
        if above != below:
            raise ContourError(f"eigenvalue within {RESOLVENT_GUARD} of contour point {s}")
    return _negative_count(A - (center + radius) * eye) - _negative_count(A - (center - radius) * eye)


def riesz_projector_contour(H, center: float, radius: float, n_nodes: int = 128) -> SpectralProjector:
    """(1/2 pi i) \\oint (z - H)^{-1} dz by the trapezoidal rule on n_nodes points.

    Nodes sit at angles 2 pi (k + 1/2) / n_nodes so none falls on the real
    axis; conjugate-symmetric pairs are folded using R(conj z) = R(z)^dagger.
    """
    if n_nodes < 8 or n_nodes % 2:
        raise ValueError("n_nodes must be an even integer >= 8")
    A = _dense(H)
    n = len(A)
    rank = _check_contour(A, center, radius)
    eye = np.eye(n)
    P = np.zeros((n, n), dtype=complex)
    for k in range(n_nodes // 2):
        phase = np.exp(2j * np.pi * (k + 0.5) / n_nodes)
        z = center + radius * phase
        term = radius * phase * np.linalg.solve(z * eye - A, eye)
        P += term + term.conj().T
    P /= n_nodes
    return SpectralProjector(center, radius, rank, P)


def contour_apply(H, center: float, radius: float, vectors: np.ndarray, n_nodes: int = 64) -> np.ndarray:
    """Projector-times-vectors via sparse resolvent solves; no dense n x n work."""
    M = H.matrix if isinstance(H, FiberOperator) else sp.csc_matrix(H)
    n = M.shape[0]
    I = sp.identity(n, dtype=complex, format="csc")
    out = np.zeros(vectors.shape, dtype=complex)
    for k in range(n_nodes):
        phase = np.exp(2j * np.pi * (k + 0.5) / n_nodes)
        z = center + radius * phase
        lu = spla.splu((z * I - M).tocsc())
        out += radius * phase * lu.solve(np.asarray(vectors, dtype=complex))
    return out / n_nodes


def default_radius(eigenvalues, index: int) -> float:
    """Half the gap from the cluster containing ``index`` to its nearest other eigenvalue."""
    lam = np.asarray(eigenvalues)
    e = lam[index]
    tol = 1e-6 * max(1.0, abs(e))
    others = lam[np.abs(lam - e) > tol]
    if others.size == 0:
        raise ValueError("no other eigenvalue to measure a gap against")
    return 0.5 * float(np.min(np.abs(others - e)))


def gram_matrix(P, psis: np.ndarray) -> np.ndarray:
    Pm = P.matrix if isinstance(P, SpectralProjector) else P
    projected = Pm @ psis
    return projected.conj().T @ projected


def gram_orthonormalize(P, psis: np.ndarray) -> np.ndarray:
    """Orthonormal basis (P psi) G^{-1/2} of range(P), G the Gram matrix of P psi."""
    Pm = P.matrix if isinstance(P, SpectralProjector) else P
    projected = Pm @ np.asarray(psis)
    return _lowdin(projected)


def _lowdin(projected: np.ndarray) -> np.ndarray:
    G = projected.conj().T @ projected
    w, U = np.linalg.eigh(0.5 * (G + G.conj().T))
    if w.min() <= GRAM_FLOOR:
        raise ContinuationLostError(
            f"Gram matrix nearly singular (smallest eigenvalue {w.min():.3e}); re-seed the reference vectors"
        )
    inv_sqrt = (U / np.sqrt(w)) @ U.conj().T
    return projected @ inv_sqrt


def reduced_matrix(H, phi: np.ndarray) -> np.ndarray:
    """Matrix <phi_i, H phi_j> of H restricted to span(phi)."""
    M = H.matrix if isinstance(H, FiberOperator) else H
    return np.asarray(phi.conj().T @ (M @ phi))


def characteristic_polynomial(Mt: np.ndarray) -> np.ndarray:
    """Coefficients (highest degree first) of det(E - Mt) as a polynomial in E."""
    return np.poly(np.linalg.eigvalsh(0.5 * (Mt + Mt.conj().T)))


def projected_perturbation(phi: np.ndarray, U: PotentialSpec, grid: Grid) -> np.ndarray:
    """<phi_i, U phi_j> for an orthonormal set phi; its eigenvalues are first-order splittings."""
    u = potential_on_grid(grid, U)
    return phi.conj().T @ (u[:, None] * phi)


def hellmann_feynman(phi: np.ndarray, U: PotentialSpec, grid: Grid, gap: float | None = None) -> float:
    """dE/dt = <U phi, phi> for the perturbation V + tU of a simple level.

    ``phi`` is a grid vector; it is normalized in the cell measure before the
    Riemann sum, so any overall scale is accepted. Pass ``gap`` (distance to
    the nearest other eigenvalue) to have degenerate levels rejected.
    """
    if gap is not None and gap <= 1e-6:
        raise DegenerateLevelError(
            f"level gap {gap:.2e} too small; use projected_perturbation on the cluster instead"
        )
    u = potential_on_grid(grid, U)
    w = grid.site_weight
    density = np.abs(phi) ** 2
    density = density / (w * density.sum())
    return float(np.sum(u * density) * w)
