"""Lattice geometry, rational flux and the magnetic translation algebra.

Conventions: ``a ^ b = a[0]*b[1] - a[1]*b[0]`` (signed), symmetric gauge
``A(x) = (B/2) (-x2, x1)``. Sampled functions are plain callables taking an
array of points with trailing dimension 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd, pi
from typing import Callable

import numpy as np

from .errors import DegenerateLatticeError, NotRationalError

SampledFunction = Callable[[np.ndarray], np.ndarray]

# |cell_area| below this (relative to |e1||e2|) counts as degenerate
_DEGENERACY_RTOL = 1e-12


def wedge(a, b):
    """Signed 2D cross product; broadcasts over leading dimensions."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _solve_dual(u1: np.ndarray, u2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (f1, f2) with f_i . u_j = 2 pi delta_ij."""
    U = np.array([u1, u2], dtype=float)
    scale = np.linalg.norm(u1) * np.linalg.norm(u2)
    if scale == 0.0 or abs(np.linalg.det(U)) <= _DEGENERACY_RTOL * scale:
        raise DegenerateLatticeError(f"degenerate basis u1={u1.tolist()}, u2={u2.tolist()}")
    # rows of F satisfy F @ U.T = 2 pi I
    F = 2.0 * pi * np.linalg.solve(U, np.eye(2)).T
    return F[0].copy(), F[1].copy()


@dataclass(frozen=True)
class Lattice:
    """Non-degenerate lattice Gamma = Z e1 + Z e2."""

    e1: tuple[float, float]
    e2: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "e1", (float(self.e1[0]), float(self.e1[1])))
        object.__setattr__(self, "e2", (float(self.e2[0]), float(self.e2[1])))
        scale = np.hypot(*self.e1) * np.hypot(*self.e2)
        if scale == 0.0 or abs(self.cell_area) <= _DEGENERACY_RTOL * scale:
            raise DegenerateLatticeError(f"degenerate lattice e1={self.e1}, e2={self.e2}")

    @classmethod
    def square(cls, a: float = 1.0) -> "Lattice":
        return cls((a, 0.0), (0.0, a))

    @classmethod
    def triangular(cls, a: float = 1.0) -> "Lattice":
        return cls((a, 0.0), (0.5 * a, 0.5 * np.sqrt(3.0) * a))

    @property
    def cell_area(self) -> float:
        return float(wedge(self.e1, self.e2))

    @property
    def basis(self) -> np.ndarray:
        """2x2 array with rows e1, e2."""
        return np.array([self.e1, self.e2])

    def dual_basis(self) -> tuple[np.ndarray, np.ndarray]:
        """Reciprocal basis (b1, b2) of Gamma itself."""
        return _solve_dual(np.array(self.e1), np.array(self.e2))


@dataclass(frozen=True)
class FluxRational:
    """Flux B with B * (e1 ^ e2) = 2 pi p / q, p/q in lowest terms, q > 0."""

    p: int
    q: int
    lattice: Lattice

    def __post_init__(self):
        if self.q <= 0 or gcd(abs(self.p), self.q) != 1:
            raise ValueError(f"flux {self.p}/{self.q} is not in lowest terms; use make_flux")

    @property
    def B(self) -> float:
        return 2.0 * pi * self.p / (self.q * self.lattice.cell_area)

    @property
    def fraction(self) -> float:
        return self.p / self.q

    def sublattice(self) -> "SublatticePrime":
        return SublatticePrime.from_flux(self)


@dataclass(frozen=True)
class GammaPrimeVector:
    """The vector q*g1*e1 + g2*e2 of the magnetic sublattice."""

    g1: int
    g2: int

    def vector(self, flux: FluxRational) -> np.ndarray:
        e1 = np.array(flux.lattice.e1)
        e2 = np.array(flux.lattice.e2)
        return flux.q * self.g1 * e1 + self.g2 * e2

    def __add__(self, other: "GammaPrimeVector") -> "GammaPrimeVector":
        return GammaPrimeVector(self.g1 + other.g1, self.g2 + other.g2)


@dataclass(frozen=True)
class SublatticePrime:
    """Magnetic sublattice basis u1 = q e1, u2 = e2 and its dual (f1, f2)."""

    u1: tuple[float, float]
    u2: tuple[float, float]

    @classmethod
    def from_flux(cls, flux: FluxRational) -> "SublatticePrime":
        e1 = np.array(flux.lattice.e1)
        return cls(tuple(flux.q * e1), flux.lattice.e2)

    @property
    def f1(self) -> np.ndarray:
        return dual_basis(self)[0]

    @property
    def f2(self) -> np.ndarray:
        return dual_basis(self)[1]

    @property
    def cell_area(self) -> float:
        return float(wedge(self.u1, self.u2))


def make_flux(p: int, q: int, lattice: Lattice) -> FluxRational:
    """Build the flux p/q per lattice cell, reducing the fraction first.

    >>> make_flux(2, 4, Lattice.square()).q
    2
    """
    p, q = int(p), int(q)
    if q == 0:
        raise ValueError("q must be nonzero")
    if q < 0:
        p, q = -p, -q
    d = gcd(abs(p), q)
    return FluxRational(p // d, q // d, lattice)


def detect_flux(B: float, lattice: Lattice, qmax: int, tol: float = 1e-9) -> FluxRational:
    """Rationalize B * area / 2 pi as p/q with the smallest admissible q <= qmax."""
    if qmax < 1 or tol <= 0:
        raise ValueError("need qmax >= 1 and tol > 0")
    ratio = B * lattice.cell_area / (2.0 * pi)
    for q in range(1, qmax + 1):
        p = round(ratio * q)
        if abs(ratio - p / q) <= tol:
            return make_flux(p, q, lattice)
    raise NotRationalError(f"flux ratio {ratio!r} has no p/q with q <= {qmax} within {tol}")


def commutation_phase(alpha, beta, B: float) -> complex:
    """Phase c with U_alpha U_beta = c U_beta U_alpha, i.e. exp(i B alpha ^ beta)."""
    return complex(np.exp(1j * B * wedge(alpha, beta)))


def theta_phase(g: GammaPrimeVector, p: int) -> int:
    """Cocycle sign exp(i pi p g1 g2), computed in integers."""
    return -1 if (p * g.g1 * g.g2) % 2 else 1


def magnetic_translate(f: SampledFunction, alpha, B: float) -> SampledFunction:
    """Return x -> exp((iB/2) x ^ alpha) f(x + alpha)."""
    alpha = np.asarray(alpha, dtype=float)

    def translated(x):
        x = np.asarray(x, dtype=float)
        return np.exp(0.5j * B * wedge(x, alpha)) * f(x + alpha)

    return translated


def weyl_translate(f: SampledFunction, g: GammaPrimeVector, flux: FluxRational) -> SampledFunction:
    """Return W_g f = Theta(g) U_g f; a true (non-projective) action of the sublattice."""
    shifted = magnetic_translate(f, g.vector(flux), flux.B)
    sign = theta_phase(g, flux.p)

    def translated(x):
        return sign * shifted(x)

    return translated


def dual_basis(sub: SublatticePrime) -> tuple[np.ndarray, np.ndarray]:
    """Dual basis (f1, f2) of the magnetic sublattice: f_i . u_j = 2 pi delta_ij."""
    return _solve_dual(np.array(sub.u1), np.array(sub.u2))


def _gaussian(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * np.sum(x * x, axis=-1) + 0.3j * x[..., 0])


def algebra_checks(flux: FluxRational, n_samples: int = 10_000, seed: int = 0) -> dict[str, float]:
    """Largest error of each translation-algebra identity over random samples.

    Keys: commutation antisymmetry, Abelian pair (q e1, e2), cocycle signs,
    U composition law, W group law and the "q-th power" relation between the
    magnetic translations by e1 and e2.
    """
    rng = np.random.default_rng(seed)
    B = flux.B
    e1, e2 = np.array(flux.lattice.e1), np.array(flux.lattice.e2)
    errors = {}

    alpha = rng.normal(scale=2.0, size=(n_samples, 2))
    beta = rng.normal(scale=2.0, size=(n_samples, 2))
    fwd = np.exp(1j * B * wedge(alpha, beta))
    bwd = np.exp(1j * B * wedge(beta, alpha))
    errors["commutation_antisymmetry"] = float(np.max(np.abs(fwd * bwd - 1.0)))
    errors["commutation_unit_modulus"] = float(np.max(np.abs(np.abs(fwd) - 1.0)))
    errors["abelian_pair"] = abs(commutation_phase(flux.q * e1, e2, B) - 1.0)
    errors["elementary_phase"] = abs(commutation_phase(e1, e2, B) - np.exp(2j * pi * flux.p / flux.q))

    ints = rng.integers(-6, 7, size=(n_samples, 2))
    exact = np.array([theta_phase(GammaPrimeVector(int(a), int(b)), flux.p) for a, b in ints])
    float_sign = np.exp(1j * B * flux.lattice.cell_area * flux.q * ints[:, 0] * ints[:, 1] / 2)
    errors["theta_phase"] = float(np.max(np.abs(exact - float_sign)))

    # pointwise laws, a few hundred points per random pair of group elements
    n_pairs = max(1, n_samples // 200)
    pts_per_pair = max(1, n_samples // n_pairs)
    u_err = w_err = q_err = 0.0
    for _ in range(n_pairs):
        x = rng.uniform(-1.5, 1.5, size=(pts_per_pair, 2))
        a, b = rng.uniform(-0.7, 0.7, size=(2, 2))
        lhs = magnetic_translate(magnetic_translate(_gaussian, b, B), a, B)(x)
        rhs = commutation_phase(a, b, B) * magnetic_translate(magnetic_translate(_gaussian, a, B), b, B)(x)
        u_err = max(u_err, float(np.max(np.abs(lhs - rhs))))

        g = GammaPrimeVector(*map(int, rng.integers(-1, 2, size=2)))
        h = GammaPrimeVector(*map(int, rng.integers(-1, 2, size=2)))
        # translate the test function back near the origin so values stay O(1)
        f = magnetic_translate(_gaussian, -(g + h).vector(flux), B)
        lhs = weyl_translate(weyl_translate(f, h, flux), g, flux)(x)
        rhs = weyl_translate(f, g + h, flux)(x)
        w_err = max(w_err, float(np.max(np.abs(lhs - rhs))))

        f = magnetic_translate(_gaussian, -(flux.q * e1 + e2), B)
        step1 = lambda fn: magnetic_translate(fn, e1, B)  # noqa: E731
        power_then_2 = magnetic_translate(f, e2, B)
        for _ in range(flux.q):
            power_then_2 = step1(power_then_2)
        two_then_power = f
        for _ in range(flux.q):
            two_then_power = step1(two_then_power)
        two_then_power = magnetic_translate(two_then_power, e2, B)
        q_err = max(q_err, float(np.max(np.abs(power_then_2(x) - two_then_power(x)))))
    errors["u_composition"] = u_err
    errors["w_group_law"] = w_err
    errors["power_commutes"] = q_err
    return errors
