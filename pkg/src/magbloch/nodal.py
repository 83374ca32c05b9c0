"""Diagnostic scan of eigenfunction zero sets on the fiber grid.

Reports connected components of near-zero cells (periodic in both grid
directions), labels each as point-, curve- or region-like, and marks the
cells where the discrete gradient is small as well. Heuristic only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DegenerateLevelError
from .fiber import EigenSolution, FiberOperator, Grid, _hop

POINT_DIAMETER = 3


@dataclass(frozen=True)
class NodalComponent:
    cells: tuple[tuple[int, int], ...]
    diameter: int
    kind: str  # "point" | "curve" | "region"
    gradient_cells: tuple[tuple[int, int], ...] = ()

    @property
    def size(self) -> int:
        return len(self.cells)


@dataclass(frozen=True)
class NodalReport:
    zero_tol: float
    grad_tol: float
    components: tuple[NodalComponent, ...] = field(default_factory=tuple)

    @property
    def empty(self) -> bool:
        return not self.components

    def gradient_components(self) -> list[list[tuple[int, int]]]:
        """Connected groups of cells flagged by both the value and gradient tests."""
        return [list(c.gradient_cells) for c in self.components if c.gradient_cells]


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, i):
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _periodic_components(mask: np.ndarray) -> list[list[tuple[int, int]]]:
    labels, n = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    if n == 0:
        return []
    uf = _UnionFind(n + 1)
    N1, N2 = mask.shape
    for j in range(N2):
        for dj in (-1, 0, 1):
            a, b = labels[N1 - 1, j], labels[0, (j + dj) % N2]
            if a and b:
                uf.union(a, b)
    for i in range(N1):
        for di in (-1, 0, 1):
            a, b = labels[i, N2 - 1], labels[(i + di) % N1, 0]
            if a and b:
                uf.union(a, b)
    groups: dict[int, list[tuple[int, int]]] = {}
    for i, j in zip(*np.nonzero(labels)):
        groups.setdefault(uf.find(labels[i, j]), []).append((int(i), int(j)))
    return [sorted(cells) for _, cells in sorted(groups.items(), key=lambda kv: min(kv[1]))]


def _classify(cells) -> tuple[int, str]:
    rows = {i for i, _ in cells}
    cols = {j for _, j in cells}
    diameter = max(len(rows), len(cols))
    if diameter <= POINT_DIAMETER:
        return diameter, "point"
    if len(cells) <= 3 * diameter:
        return diameter, "curve"
    return diameter, "region"


def _gradient_magnitude(phi: np.ndarray, grid: Grid, fiber: FiberOperator | None) -> np.ndarray:
    h1 = np.linalg.norm(grid.a1)
    h2 = np.linalg.norm(grid.a2)
    if fiber is not None:
        # covariant central differences, consistent with the twisted boundary condition
        tvec = grid.theta_vector(fiber.theta)
        T1, T2 = _hop(grid, 1, 0, tvec), _hop(grid, 0, 1, tvec)
        d1 = (T1 @ phi - T1.conj().T @ phi) / (2 * h1)
        d2 = (T2 @ phi - T2.conj().T @ phi) / (2 * h2)
        return np.sqrt(np.abs(d1) ** 2 + np.abs(d2) ** 2).reshape(grid.N1, grid.N2)
    f = phi.reshape(grid.N1, grid.N2)
    d1 = (np.roll(f, -1, 0) - np.roll(f, 1, 0)) / (2 * h1)
    d2 = (np.roll(f, -1, 1) - np.roll(f, 1, 1)) / (2 * h2)
    return np.sqrt(np.abs(d1) ** 2 + np.abs(d2) ** 2)


def nodal_scan(
    phi: np.ndarray,
    grid: Grid,
    zero_tol: float = 1e-2,
    grad_tol: float = 5e-2,
    fiber: FiberOperator | None = None,
) -> NodalReport:
    """Cells with |phi| < zero_tol * max|phi|, grouped into periodic components.

    Within each component, cells whose gradient magnitude is also below
    grad_tol * max|grad phi| form the Z_grad probe. Pass ``fiber`` to use
    covariant differences across the twisted cell boundary; without it,
    plain periodic differences are used (for synthetic inputs).
    """
    phi = np.asarray(phi).ravel()
    amp = np.abs(phi).reshape(grid.N1, grid.N2)
    mask = amp < zero_tol * amp.max()
    grad = _gradient_magnitude(phi, grid, fiber)
    gmask = grad < grad_tol * grad.max()
    components = []
    for cells in _periodic_components(mask):
        diameter, kind = _classify(cells)
        gcells = tuple(c for c in cells if gmask[c])
        components.append(NodalComponent(tuple(cells), diameter, kind, gcells))
    return NodalReport(zero_tol, grad_tol, tuple(components))


def nodal_scan_level(
    fiber: FiberOperator, es: EigenSolution, n: int, zero_tol: float = 1e-2, grad_tol: float = 5e-2
) -> NodalReport:
    """nodal_scan on eigenvector n, refusing levels that are not simple."""
    lam = es.eigenvalues
    if not es.complete and n >= len(lam) - 1:
        # its partner could be the first uncomputed eigenvalue
        raise DegenerateLevelError(f"level {n} is the last computed one; solve for more states")
    others = np.delete(lam, n)
    if others.size and np.min(np.abs(others - lam[n])) <= 1e-6 * max(1.0, abs(lam[n])):
        raise DegenerateLevelError(f"level {n} is degenerate; its nodal set depends on the basis")
    return nodal_scan(es.eigenvectors[:, n], fiber.grid, zero_tol, grad_tol, fiber=fiber)
