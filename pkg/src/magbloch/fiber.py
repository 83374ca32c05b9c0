"""Discretized fiber operators H(theta, V) = (i grad + A - theta)^2 + V.

The fiber lives on the magnetic cell spanned by u1 = q e1, u2 = e2, sampled
on an N1 x N2 grid. Kinetic energy is a second-order covariant finite
difference stencil with Peierls link phases for W = A - theta; hops that
leave the cell are folded back with the twisted boundary condition

    v(x + g) = Theta(g) exp(-(iB/2) x ^ g) v(x),   g in the magnetic sublattice,

which is exactly the invariance ``W_g v = v``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AssemblyError, SolverError
from .lattice import FluxRational, Lattice, dual_basis, wedge
from .potential import PotentialSpec, evaluate


# dense LAPACK below this dimension, shift-invert Lanczos above
DENSE_LIMIT = 300
HERMITIAN_RTOL = 1e-12
RESIDUAL_RTOL = 1e-8


@dataclass(frozen=True)
class Grid:
    """Uniform N1 x N2 sampling of the magnetic cell."""

    lattice: Lattice
    flux: FluxRational
    N1: int
    N2: int

    def __post_init__(self):
        if self.N1 < 4 or self.N2 < 4:
            raise ValueError(f"grid needs N1, N2 >= 4, got {self.N1}x{self.N2}")

    @property
    def u1(self) -> np.ndarray:
        return self.flux.q * np.array(self.lattice.e1)

    @property
    def u2(self) -> np.ndarray:
        return np.array(self.lattice.e2)

    @property
    def a1(self) -> np.ndarray:
        return self.u1 / self.N1

    @property
    def a2(self) -> np.ndarray:
        return self.u2 / self.N2

    @property
    def metric(self) -> np.ndarray:
        """Inverse Gram matrix of the step vectors: Laplacian = sum g_ij d_i d_j."""
        A = np.array([self.a1, self.a2])
        return np.linalg.inv(A @ A.T)

    @property
    def dim(self) -> int:
        return self.N1 * self.N2

    @property
    def cell_area(self) -> float:
        return float(wedge(self.u1, self.u2))

    @property
    def site_weight(self) -> float:
        """Area element per site, for Riemann sums over the cell."""
        return abs(self.cell_area) / self.dim

    def dual(self) -> tuple[np.ndarray, np.ndarray]:
        return dual_basis(self.flux.sublattice())

    def theta_vector(self, theta) -> np.ndarray:
        f1, f2 = self.dual()
        return theta[0] * f1 + theta[1] * f2

    def points(self) -> np.ndarray:
        """Site positions, shape (N1*N2, 2), site index s1*N2 + s2."""
        s1, s2 = np.meshgrid(np.arange(self.N1), np.arange(self.N2), indexing="ij")
        frac1 = (s1 / self.N1).ravel()
        frac2 = (s2 / self.N2).ravel()
        return frac1[:, None] * self.u1 + frac2[:, None] * self.u2


def build_grid(lattice: Lattice, flux: FluxRational, N1: int, N2: int) -> Grid:
    if lattice != flux.lattice:
        raise ValueError("flux was built for a different lattice")
    return Grid(lattice, flux, int(N1), int(N2))


def grid_per_cell(lattice: Lattice, flux: FluxRational, n1: int, n2: int) -> Grid:
    """Grid with n1 x n2 sites per lattice cell (so N1 = q * n1 on the magnetic cell)."""
    return build_grid(lattice, flux, flux.q * n1, n2)


def _theta_sign(p: int, n1: np.ndarray, n2: np.ndarray) -> np.ndarray:
    return np.where((p * n1 * n2) % 2 == 1, -1.0, 1.0)


def _shift(grid: Grid, k1: int, k2: int):
    """Fold the shift s -> s + (k1, k2) back into the cell.

    Returns (target index, winding n1, winding n2, folded target position).
    """
    s1, s2 = np.meshgrid(np.arange(grid.N1), np.arange(grid.N2), indexing="ij")
    r1, r2 = (s1 + k1).ravel(), (s2 + k2).ravel()
    n1, t1 = np.divmod(r1, grid.N1)
    n2, t2 = np.divmod(r2, grid.N2)
    target = t1 * grid.N2 + t2
    y = (t1 / grid.N1)[:, None] * grid.u1 + (t2 / grid.N2)[:, None] * grid.u2
    return target, n1, n2, y


def wrap_phase(grid: Grid, y: np.ndarray, n1: np.ndarray, n2: np.ndarray) -> np.ndarray:
    """Factor c with v(y + n1 u1 + n2 u2) = c v(y) on the fiber space."""
    B = grid.flux.B
    gvec = n1[:, None] * grid.u1 + n2[:, None] * grid.u2
    return _theta_sign(grid.flux.p, n1, n2) * np.exp(-0.5j * B * wedge(y, gvec))


def _hop(grid: Grid, k1: int, k2: int, theta_vec: np.ndarray) -> sp.csr_matrix:
    """Covariant shift T with (T v)(x) = exp(-i int_x^{x+d} W) v(x + d), d = k1 a1 + k2 a2."""
    B = grid.flux.B
    d = k1 * grid.a1 + k2 * grid.a2
    x = grid.points()
    target, n1, n2, y = _shift(grid, k1, k2)
    # midpoint rule is exact for affine W: int W.dl = (B/2) x^d - theta.d
    link = np.exp(-0.5j * B * wedge(x, d) + 1j * float(theta_vec @ d))
    vals = link * wrap_phase(grid, y, n1, n2)
    rows = np.arange(grid.dim)
    return sp.csr_matrix((vals, (rows, target)), shape=(grid.dim, grid.dim))


def _stencil(grid: Grid) -> list[tuple[int, int, float]]:
    g = grid.metric
    terms = [(1, 0, -g[0, 0]), (0, 1, -g[1, 1])]
    if abs(g[0, 1]) > 1e-14 * max(abs(g[0, 0]), abs(g[1, 1])):
        # 2 g12 D1 D2 (symmetrized) = (g12/2) (D_+^2 - D_-^2)
        terms += [(1, 1, -0.5 * g[0, 1]), (1, -1, 0.5 * g[0, 1])]
    return terms


@dataclass(frozen=True, eq=False)
class FiberOperator:
    grid: Grid
    potential: PotentialSpec
    theta: tuple[float, float]
    matrix: sp.csr_matrix = field(repr=False)

    @property
    def flux(self) -> FluxRational:
        return self.grid.flux

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def hermiticity_defect(self) -> float:
        """max |H - H^dagger| / max |H|."""
        diff = self.matrix - self.matrix.conj().T
        top = abs(self.matrix).max()
        return float(abs(diff).max() / top) if diff.nnz else 0.0


def potential_on_grid(grid: Grid, V: PotentialSpec) -> np.ndarray:
    if V.lattice != grid.lattice:
        raise ValueError("potential was built for a different lattice")
    return np.asarray(evaluate(V, grid.points()), dtype=float)


def assemble(grid: Grid, V: PotentialSpec, theta=(0.0, 0.0)) -> FiberOperator:
    """Assemble the sparse Hermitian fiber matrix at quasi-momentum theta.

    ``theta`` holds coefficients with respect to the dual basis (f1, f2) of
    the magnetic sublattice. Values outside [0, 1) are accepted and give a
    unitarily equivalent matrix.
    """
    theta = (float(theta[0]), float(theta[1]))
    tvec = grid.theta_vector(theta)
    g = grid.metric
    diag = 2.0 * (g[0, 0] + g[1, 1]) + potential_on_grid(grid, V)
    H = sp.diags(diag.astype(complex), format="csr")
    for k1, k2, w in _stencil(grid):
        T = w * _hop(grid, k1, k2, tvec)
        H = H + T + T.conj().T
    H = H.tocsr()
    H.sum_duplicates()
    op = FiberOperator(grid, V, theta, H)
    defect = op.hermiticity_defect()
    if defect > HERMITIAN_RTOL:
        raise AssemblyError(f"assembled fiber not Hermitian (defect {defect:.3e})")
    return op


def translation_operator(grid: Grid, k1: int, k2: int) -> sp.csr_matrix:
    """Discrete magnetic translation by alpha = k1 a1 + k2 a2 acting on the fiber space.

    (T v)(x) = exp((iB/2) x ^ alpha) v(x + alpha), with v(x + alpha) folded back
    through the twisted boundary condition.
    """
    B = grid.flux.B
    alpha = k1 * grid.a1 + k2 * grid.a2
    x = grid.points()
    target, n1, n2, y = _shift(grid, k1, k2)
    vals = np.exp(0.5j * B * wedge(x, alpha)) * wrap_phase(grid, y, n1, n2)
    rows = np.arange(grid.dim)
    return sp.csr_matrix((vals, (rows, target)), shape=(grid.dim, grid.dim))


@dataclass(frozen=True, eq=False)
class EigenSolution:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    dim: int
    matrix_norm: float

    @property
    def complete(self) -> bool:
        return len(self.eigenvalues) == self.dim

    def clusters(self, rtol: float = 1e-6) -> list[list[int]]:
        return cluster_indices(self.eigenvalues, rtol)


def cluster_indices(values, rtol: float = 1e-6) -> list[list[int]]:
    """Group sorted values whose neighbours lie within rtol * max(1, |E|)."""
    groups: list[list[int]] = []
    for i, e in enumerate(values):
        if groups and abs(e - values[groups[-1][-1]]) <= rtol * max(1.0, abs(e)):
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def _as_matrix(H):
    if isinstance(H, FiberOperator):
        return H.matrix
    if sp.issparse(H):
        return H.tocsr()
    return np.asarray(H)


def _check_hermitian(M) -> None:
    if sp.issparse(M):
        top = abs(M).max() if M.nnz else 0.0
        diff = abs(M - M.conj().T).max() if M.nnz else 0.0
    else:
        top = np.max(np.abs(M), initial=0.0)
        diff = np.max(np.abs(M - M.conj().T), initial=0.0)
    if diff > HERMITIAN_RTOL * max(top, 1e-300):
        raise AssemblyError(f"matrix is not Hermitian (defect {diff:.3e} vs scale {top:.3e})")


def eigensolve(H, m: int, sigma: float | None = None) -> EigenSolution:
    """Lowest m eigenpairs of a Hermitian fiber (or plain) matrix.

    Dense LAPACK for small problems, shift-invert Lanczos below the spectrum
    otherwise, followed by a Rayleigh-Ritz cleanup so the returned vectors
    are orthonormal.
    """
    M = _as_matrix(H)
    n = M.shape[0]
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= {n}, got {m}")
    _check_hermitian(M)
    if sp.issparse(M):
        fro = float(np.sqrt(np.sum(np.abs(M.data) ** 2)))
    else:
        fro = float(np.linalg.norm(M))

    if n <= DENSE_LIMIT or not sp.issparse(M) or m > n // 4:
        A = M.toarray() if sp.issparse(M) else M
        w, v = scipy.linalg.eigh(A, subset_by_index=[0, m - 1])
    else:
        if sigma is None:
            sigma = _spectrum_floor(H) - 1.0
        k = min(m + 4, n - 2)
        v0 = np.ones(n, dtype=complex) / np.sqrt(n)
        try:
            _, vecs = spla.eigsh(M, k=k, sigma=sigma, which="LM", v0=v0,
                                 ncv=min(n - 1, max(2 * k + 1, 24)))
        except spla.ArpackError as exc:
            raise SolverError(f"Lanczos failed: {exc}") from exc
        Q, _ = np.linalg.qr(vecs)
        small = Q.conj().T @ (M @ Q)
        w, c = np.linalg.eigh(0.5 * (small + small.conj().T))
        w, v = w[:m], Q @ c[:, :m]
        if w[0] < sigma:
            raise SolverError("eigenvalue found below the shift; spectrum floor estimate wrong")

    residuals = np.linalg.norm(M @ v - v * w, axis=0)
    bad = residuals > RESIDUAL_RTOL * max(fro, 1.0)
    if np.any(bad):
        raise SolverError(f"residual contract violated for {int(bad.sum())} eigenpairs "
                          f"(max {residuals.max():.3e})")
    return EigenSolution(np.asarray(w, float), v, residuals, n, fro)


def _spectrum_floor(H) -> float:
    """A value at or below the smallest eigenvalue."""
    if isinstance(H, FiberOperator):
        if H.potential.modes:
            return float(np.min(potential_on_grid(H.grid, H.potential)))
        return 0.0
    M = _as_matrix(H)
    # Gershgorin bound for anything else
    diag = M.diagonal().real
    radius = np.asarray(abs(M).sum(axis=1)).ravel() - np.abs(M.diagonal())
    return float(np.min(diag - radius))
