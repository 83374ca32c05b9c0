"""Independent reference computations used only by the tests."""

from __future__ import annotations

from fractions import Fraction
from math import pi

import numpy as np


def householder_tridiagonal(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reduce a Hermitian matrix to real symmetric tridiagonal form (diag, offdiag).

    Plain Householder reflections followed by a diagonal phase change that
    makes the subdiagonal real and non-negative; no LAPACK eigen-routines.
    """
    A = np.array(A, dtype=complex)
    n = len(A)
    for k in range(n - 2):
        x = A[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        # A <- H A H with H = I - 2 v v^*, acting on rows/cols k+1..n-1
        A[k + 1:, :] -= 2.0 * np.outer(v, v.conj() @ A[k + 1:, :])
        A[:, k + 1:] -= 2.0 * np.outer(A[:, k + 1:] @ v, v.conj())
    diag = A.diagonal().real.copy()
    off = np.abs(np.diagonal(A, -1))
    return diag, off


def sturm_count(diag: np.ndarray, off: np.ndarray, x: float) -> int:
    """Number of eigenvalues of the tridiagonal matrix strictly below x."""
    count = 0
    d = diag[0] - x
    if d < 0:
        count += 1
    for i in range(1, len(diag)):
        if d == 0:
            d = 1e-300
        d = diag[i] - x - off[i - 1] ** 2 / d
        if d < 0:
            count += 1
    return count


def bisection_eigvalsh(A: np.ndarray, tol: float = 1e-13) -> np.ndarray:
    """All eigenvalues of a Hermitian matrix by Sturm-sequence bisection."""
    diag, off = householder_tridiagonal(A)
    n = len(diag)
    pad = np.concatenate([[0.0], off, [0.0]])
    lo = float(np.min(diag - pad[:-1] - pad[1:]))
    hi = float(np.max(diag + pad[:-1] + pad[1:]))
    scale = max(abs(lo), abs(hi), 1.0)
    out = np.empty(n)
    for k in range(n):
        a, b = lo, hi
        while b - a > tol * scale:
            mid = 0.5 * (a + b)
            if sturm_count(diag, off, mid) > k:
                b = mid
            else:
                a = mid
        out[k] = 0.5 * (a + b)
    return out


def smallest_denominator_scan(ratio: float, qmax: int, tol: float):
    """Exhaustive search over q <= qmax and all p; returns (p, q) or None."""
    for q in range(1, qmax + 1):
        for p in range(int(np.floor(ratio * q)) - 1, int(np.ceil(ratio * q)) + 2):
            if abs(ratio - p / q) <= tol:
                f = Fraction(p, q)
                return f.numerator, f.denominator
    return None


def landau_levels(B: float, n: int) -> np.ndarray:
    """|B| (2k + 1), k = 0..n-1."""
    return abs(B) * (2 * np.arange(n) + 1)


def inverse_sqrt_2x2_equal_diag(a: float, b: float) -> np.ndarray:
    """(G)^(-1/2) for G = [[a, b], [b, a]] in closed form (eigenvalues a +- b)."""
    s, d = (a + b) ** -0.5, (a - b) ** -0.5
    return 0.5 * np.array([[s + d, s - d], [s - d, s + d]])


def weyl_translate_reference(f, g1: int, g2: int, p: int, q: int, e1, e2, x):
    """Direct evaluation of Theta U_gamma f at points x, written out in full."""
    e1, e2 = np.asarray(e1, float), np.asarray(e2, float)
    B = 2 * pi * p / (q * (e1[0] * e2[1] - e1[1] * e2[0]))
    gamma = q * g1 * e1 + g2 * e2
    sign = np.exp(1j * pi * p * g1 * g2)
    x = np.asarray(x, float)
    cross = x[:, 0] * gamma[1] - x[:, 1] * gamma[0]
    return sign * np.exp(0.5j * B * cross) * f(x + gamma)
