"""Brillouin-zone sweeps, flat-band detection and perturbation experiments."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import gcd

import numpy as np

from .errors import SolverError
from .fiber import Grid, assemble, cluster_indices, eigensolve, grid_per_cell
from .lattice import FluxRational, Lattice, make_flux
from .potential import PotentialSpec, random_potential

log = logging.getLogger(__name__)

CLUSTER_RTOL = 1e-6


@dataclass(frozen=True)
class ThetaGrid:
    """M1 x M2 points (j1/M1, j2/M2) in dual-basis coefficients; endpoint excluded."""

    M1: int
    M2: int

    def __post_init__(self):
        if self.M1 < 1 or self.M2 < 1:
            raise ValueError("theta grid needs M1, M2 >= 1")

    def coefficients(self, j1: int, j2: int) -> tuple[float, float]:
        return (j1 / self.M1, j2 / self.M2)

    def indices(self) -> list[tuple[int, int]]:
        return [(j1, j2) for j1 in range(self.M1) for j2 in range(self.M2)]


@dataclass(frozen=True, eq=False)
class BandStructure:
    energies: np.ndarray  # [M1, M2, m]
    tgrid: ThetaGrid
    provenance: dict = field(default_factory=dict)

    @property
    def n_bands(self) -> int:
        return self.energies.shape[-1]

    def dispersions(self) -> np.ndarray:
        flat = self.energies.reshape(-1, self.n_bands)
        return flat.max(axis=0) - flat.min(axis=0)


@dataclass(frozen=True, eq=False)
class FlatnessReport:
    dispersions: np.ndarray
    threshold: float
    flat: np.ndarray  # bool per band
    provenance: dict = field(default_factory=dict)

    @property
    def all_flat(self) -> bool:
        return bool(np.all(self.flat))

    def dispersive_bands(self) -> list[int]:
        return [int(n) for n in np.flatnonzero(~self.flat)]


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def band_sweep(
    lattice: Lattice,
    flux: FluxRational,
    V: PotentialSpec,
    grid: Grid,
    tgrid: ThetaGrid,
    m: int,
    threads: int = 1,
) -> BandStructure:
    """Lowest m eigenvalues of H(theta, V) at every theta of the grid."""
    if grid.flux != flux or grid.lattice != lattice:
        raise ValueError("grid was built for a different lattice or flux")
    if m > grid.dim:
        raise ValueError(f"m={m} exceeds the fiber dimension {grid.dim}")
    idx = tgrid.indices()

    def solve(ij):
        try:
            H = assemble(grid, V, tgrid.coefficients(*ij))
            return eigensolve(H, m).eigenvalues
        except SolverError as exc:
            raise SolverError(f"theta index {ij}: {exc}", theta_index=ij) from exc

    results = _map(solve, idx, threads)
    energies = np.empty((tgrid.M1, tgrid.M2, m))
    for (j1, j2), e in zip(idx, results):
        energies[j1, j2] = e
    provenance = {
        "p": flux.p,
        "q": flux.q,
        "potential": V.digest(),
        "N1": grid.N1,
        "N2": grid.N2,
        "M1": tgrid.M1,
        "M2": tgrid.M2,
    }
    return BandStructure(energies, tgrid, provenance)


def flatness_test(bs: BandStructure, threshold: float, provenance: dict | None = None) -> FlatnessReport:
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    d = bs.dispersions()
    return FlatnessReport(d, float(threshold), d <= threshold, dict(provenance or {}))


def calibrate_threshold(
    lattice: Lattice,
    flux: FluxRational,
    grid: Grid,
    tgrid: ThetaGrid,
    m: int,
    factor: float = 10.0,
    threads: int = 1,
) -> tuple[float, dict]:
    """Flatness threshold: factor x the V = 0 flatness defect on the same grids.

    A floor of 1e-9 x (largest energy) keeps the threshold above eigensolver
    rounding when the Landau bands are flat to machine precision.
    """
    bs = band_sweep(lattice, flux, PotentialSpec.zero(lattice), grid, tgrid, m, threads)
    defect = float(bs.dispersions().max())
    floor = 1e-9 * max(1.0, float(np.abs(bs.energies).max()))
    f1, f2 = grid.dual()
    spacing = max(np.linalg.norm(f1) / tgrid.M1, np.linalg.norm(f2) / tgrid.M2)
    provenance = {
        "landau_defect": defect,
        "factor": factor,
        "floor": floor,
        "theta_spacing": float(spacing),
    }
    return max(factor * defect, floor), provenance


def lipschitz_estimate(bs: BandStructure, grid: Grid) -> np.ndarray:
    """Per band, max |E_n(theta) - E_n(theta')| / |theta - theta'| over grid neighbours."""
    f1, f2 = grid.dual()
    E = bs.energies
    bounds = np.zeros(bs.n_bands)
    for axis, f, M in ((0, f1, bs.tgrid.M1), (1, f2, bs.tgrid.M2)):
        if M < 2:
            continue
        step = np.linalg.norm(f) / M
        diff = np.abs(np.roll(E, -1, axis=axis) - E) / step
        bounds = np.maximum(bounds, diff.reshape(-1, bs.n_bands).max(axis=0))
    return bounds


@dataclass
class TrackedLevel:
    first_index: int
    multiplicity: int
    energy: float
    radius: float
    rows: list = field(default_factory=list)
    slopes: np.ndarray | None = None


def degeneracy_tracker(
    lattice: Lattice,
    flux: FluxRational,
    V0: PotentialSpec,
    U: PotentialSpec,
    t_values,
    grid: Grid,
    theta,
    m: int,
    levels: list[int] | None = None,
) -> list[TrackedLevel]:
    """Follow the clusters of H(theta, V0 + tU) that start as eigenvalue clusters at t = 0.

    Each level is watched in a disk of radius half its gap at t = 0. Rows
    record the eigenvalues inside the disk, their cluster sizes, and a
    ``lost`` flag when the count inside differs from the starting
    multiplicity. Splitting slopes are fitted by least squares over the three
    smallest |t|; for t < 0 the sorted order is reversed so each branch keeps
    its first-order label.
    """
    t_values = sorted(set(float(t) for t in t_values), key=lambda t: (abs(t), t))
    if 0.0 not in t_values:
        raise ValueError("t_values must include 0")
    ref = eigensolve(assemble(grid, V0, theta), m).eigenvalues
    clusters = cluster_indices(ref, CLUSTER_RTOL)[:-1]  # last one may be cut off at m
    if levels is not None:
        clusters = [clusters[k] for k in levels]
    tracked = []
    for cl in clusters:
        e = float(np.mean(ref[cl]))
        others = np.delete(ref, cl)
        radius = 0.5 * float(np.min(np.abs(others - e)))
        tracked.append(TrackedLevel(cl[0], len(cl), e, radius))

    spectra = {t: eigensolve(assemble(grid, V0 + U.scaled(t), theta), m).eigenvalues for t in t_values}
    for lvl in tracked:
        for t in sorted(t_values):
            lam = spectra[t]
            inside = lam[np.abs(lam - lvl.energy) < lvl.radius]
            sizes = [len(c) for c in cluster_indices(inside, CLUSTER_RTOL)]
            lvl.rows.append({
                "t": t,
                "energies": inside.tolist(),
                "cluster_sizes": sizes,
                "lost": len(inside) != lvl.multiplicity,
            })
        fit_t = t_values[:3]
        if len(fit_t) == 3:
            rows = {r["t"]: r for r in lvl.rows}
            if all(not rows[t]["lost"] for t in fit_t):
                Y = np.array([rows[t]["energies"] if t >= 0 else rows[t]["energies"][::-1]
                              for t in fit_t])
                X = np.column_stack([np.ones(3), fit_t])
                coef, *_ = np.linalg.lstsq(X, Y, rcond=None)
                lvl.slopes = coef[1]
    return tracked


@dataclass(frozen=True, eq=False)
class GenericityReport:
    threshold: float
    threshold_provenance: dict
    bands: list[int]
    seeds: list[int]
    dispersions: np.ndarray  # [n_seeds, n_bands]

    @property
    def dispersive(self) -> np.ndarray:
        return self.dispersions > self.threshold

    @property
    def dispersive_fraction(self) -> float:
        if self.dispersions.size == 0:
            return 0.0
        return float(np.mean(self.dispersive))


def genericity_experiment(
    lattice: Lattice,
    flux: FluxRational,
    V0: PotentialSpec,
    seeds,
    amplitude: float,
    grid: Grid,
    tgrid: ThetaGrid,
    m: int,
    bands: list[int] | None = None,
    max_harmonic: int = 2,
    threshold: float | None = None,
    threads: int = 1,
) -> GenericityReport:
    """Perturb V0 by random potentials and count which bands stop being flat."""
    if amplitude < 0:
        raise ValueError("amplitude must be non-negative")
    bands = list(range(2 * abs(flux.p))) if bands is None else list(bands)
    if max(bands) >= m:
        raise ValueError("requested band index exceeds m")
    if threshold is None:
        threshold, prov = calibrate_threshold(lattice, flux, grid, tgrid, m, threads=threads)
    else:
        prov = {"given": threshold}
    seeds = list(seeds)
    table = np.zeros((len(seeds), len(bands)))
    for i, seed in enumerate(seeds):
        V = V0 + random_potential(lattice, seed, max_harmonic, amplitude)
        bs = band_sweep(lattice, flux, V, grid, tgrid, m, threads)
        table[i] = bs.dispersions()[bands]
        log.info("seed %d: dispersions %s", seed, np.array2string(table[i], precision=4))
    return GenericityReport(threshold, prov, bands, seeds, table)


@dataclass(frozen=True)
class FluxRow:
    p: int
    q: int
    B: float
    energies: tuple[float, ...]
    error: str | None = None

    @property
    def fraction(self) -> float:
        return self.p / self.q


def flux_sweep(
    lattice: Lattice,
    V: PotentialSpec,
    fractions,
    n_per_cell: tuple[int, int],
    theta,
    m: int,
    q_max: int = 12,
) -> list[FluxRow]:
    """Eigenvalues at fixed theta for each flux p/q; grid resolution fixed per lattice cell."""
    reduced = set()
    for p, q in fractions:
        if q <= 0:
            raise ValueError(f"q must be positive in {p}/{q}")
        d = gcd(abs(p), q)
        reduced.add((p // d, q // d))
    rows = []
    for p, q in sorted(reduced, key=lambda pq: (pq[0] / pq[1], pq[1])):
        flux = make_flux(p, q, lattice)
        if q > q_max:
            rows.append(FluxRow(p, q, flux.B, (), f"q={q} exceeds q_max={q_max}"))
            continue
        try:
            grid = grid_per_cell(lattice, flux, *n_per_cell)
            es = eigensolve(assemble(grid, V, theta), m)
            rows.append(FluxRow(p, q, flux.B, tuple(float(e) for e in es.eigenvalues)))
        except Exception as exc:  # one bad fraction must not sink the sweep
            rows.append(FluxRow(p, q, flux.B, (), f"{type(exc).__name__}: {exc}"))
    return rows
