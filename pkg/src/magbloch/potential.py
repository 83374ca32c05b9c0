"""Real, lattice-periodic potentials stored as finite Fourier series.

A mode ``(m1, m2, c)`` contributes ``c * exp(i K.x)`` with
``K = m1*b1 + m2*b2``, where (b1, b2) is the reciprocal basis of the lattice
(not of the magnetic sublattice).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import InvalidPotentialError
from .lattice import Lattice


@dataclass(frozen=True)
class PotentialSpec:
    lattice: Lattice
    modes: tuple[tuple[int, int, complex], ...] = ()

    def __post_init__(self):
        merged: dict[tuple[int, int], complex] = {}
        for m1, m2, c in self.modes:
            key = (int(m1), int(m2))
            merged[key] = merged.get(key, 0.0) + complex(c)
        modes = tuple((m1, m2, c) for (m1, m2), c in sorted(merged.items()) if c != 0)
        object.__setattr__(self, "modes", modes)

    @classmethod
    def constant(cls, lattice: Lattice, value: float) -> "PotentialSpec":
        return cls(lattice, ((0, 0, complex(value)),))

    @classmethod
    def zero(cls, lattice: Lattice) -> "PotentialSpec":
        return cls(lattice, ())

    def is_conjugate_symmetric(self, rtol: float = 1e-12) -> bool:
        table = {(m1, m2): c for m1, m2, c in self.modes}
        scale = max(self.coefficient_l1(), 1.0)
        for (m1, m2), c in table.items():
            partner = table.get((-m1, -m2), 0.0)
            if abs(partner - np.conj(c)) > rtol * scale:
                return False
        return True

    def coefficient_l1(self) -> float:
        """Sum of |c|, an upper bound for sup |V|."""
        return float(sum(abs(c) for _, _, c in self.modes))

    @property
    def is_constant(self) -> bool:
        return all(m1 == 0 and m2 == 0 for m1, m2, _ in self.modes)

    def __add__(self, other: "PotentialSpec") -> "PotentialSpec":
        return PotentialSpec(self.lattice, self.modes + other.modes)

    def scaled(self, t: float) -> "PotentialSpec":
        return PotentialSpec(self.lattice, tuple((m1, m2, t * c) for m1, m2, c in self.modes))

    def shifted(self, c: float) -> "PotentialSpec":
        return PotentialSpec(self.lattice, self.modes + ((0, 0, complex(c)),))

    def wavevectors(self) -> np.ndarray:
        b1, b2 = self.lattice.dual_basis()
        m = np.array([(m1, m2) for m1, m2, _ in self.modes], dtype=float).reshape(-1, 2)
        return m @ np.array([b1, b2])

    def digest(self) -> str:
        """Stable hash of the mode list (for provenance records)."""
        text = ";".join(f"{m1},{m2},{c.real!r},{c.imag!r}" for m1, m2, c in self.modes)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def evaluate(V: PotentialSpec, x) -> np.ndarray | float:
    """Evaluate V at one point or an array of points (trailing dim 2)."""
    if not V.is_conjugate_symmetric():
        raise InvalidPotentialError("mode list is not conjugate symmetric; V would be complex")
    x = np.asarray(x, dtype=float)
    if not V.modes:
        out = np.zeros(x.shape[:-1])
        return float(out) if out.ndim == 0 else out
    K = V.wavevectors()
    c = np.array([c for _, _, c in V.modes])
    total = np.exp(1j * (x @ K.T)) @ c
    if np.max(np.abs(total.imag), initial=0.0) > 1e-12 * V.coefficient_l1():
        raise InvalidPotentialError("evaluated potential has a non-negligible imaginary part")
    out = total.real
    return float(out) if out.ndim == 0 else out


def random_potential(
    lattice: Lattice, seed: int, max_harmonic: int, amplitude: float
) -> PotentialSpec:
    """Deterministic random trigonometric polynomial with sum |c| == amplitude.

    Modes with |m1|, |m2| <= max_harmonic, excluding the constant mode. The
    coefficient l1-norm bounds the uniform norm, so ``sup|V| <= amplitude``.
    """
    if amplitude < 0:
        raise ValueError("amplitude must be non-negative")
    if amplitude == 0 or max_harmonic < 1:
        return PotentialSpec.zero(lattice)
    rng = np.random.default_rng(seed)
    half = [
        (m1, m2)
        for m1 in range(0, max_harmonic + 1)
        for m2 in range(-max_harmonic, max_harmonic + 1)
        if (m1, m2) > (0, 0)
    ]
    coeffs = rng.normal(size=len(half)) + 1j * rng.normal(size=len(half))
    # pairs contribute 2|c| to the l1 norm
    coeffs *= amplitude / (2.0 * np.sum(np.abs(coeffs)))
    modes = []
    for (m1, m2), c in zip(half, coeffs):
        modes.append((m1, m2, complex(c)))
        modes.append((-m1, -m2, complex(np.conj(c))))
    return PotentialSpec(lattice, tuple(modes))


def cosine_potential(lattice: Lattice, amplitude: float = 1.0, m=(1, 0)) -> PotentialSpec:
    """amplitude * cos(K.x) for the single reciprocal vector K = m1 b1 + m2 b2."""
    m1, m2 = m
    half = 0.5 * amplitude
    return PotentialSpec(lattice, ((m1, m2, half), (-m1, -m2, half)))


def cell_points(lattice: Lattice, n1: int, n2: int | None = None) -> np.ndarray:
    """Points (s1/n1) e1 + (s2/n2) e2 of the unit cell, shape (n1, n2, 2)."""
    n2 = n1 if n2 is None else n2
    s1, s2 = np.meshgrid(np.arange(n1) / n1, np.arange(n2) / n2, indexing="ij")
    return s1[..., None] * np.array(lattice.e1) + s2[..., None] * np.array(lattice.e2)


def sup_norm(V: PotentialSpec, n_grid: int = 64) -> float:
    """max |V| over an n_grid x n_grid sampling of one lattice cell."""
    if n_grid < 2:
        raise ValueError("n_grid must be >= 2")
    if not V.modes:
        return 0.0
    return float(np.max(np.abs(evaluate(V, cell_points(V.lattice, n_grid)))))
