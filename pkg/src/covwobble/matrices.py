"""Symmetric-matrix arithmetic: Jacobi eigendecomposition, fractional powers,
eigenvalue bands and entrywise perturbation classes.

Symmetric matrices are plain float ndarrays whose symmetry is made exact by
mirroring the upper triangle (see :func:`symmetrize`).  All functions are pure
and reentrant; returned arrays are fresh.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionError,
    NotPositiveDefiniteError,
    NotSymmetricError,
    NumericalError,
)

TOL_EIG = 1e-12    # off-diagonal norm target of the Jacobi sweep, relative
TOL_PD = 1e-12     # positive-definiteness floor for fractional powers
TOL_BAND = 1e-10   # outward tolerance of band membership


@dataclass(frozen=True)
class Band:
    """Eigenvalue band [a, b] for symmetric positive definite m x m matrices."""

    m: int
    a: float
    b: float

    def __post_init__(self):
        if self.m < 1:
            raise DimensionError(f"band dimension must be >= 1, got {self.m}")
        if not 0.0 < self.a < self.b:
            raise NotPositiveDefiniteError(
                f"band requires 0 < a < b, got a={self.a}, b={self.b}"
            )


def symmetrize(a) -> np.ndarray:
    """Return a copy of ``a`` with exact symmetry (upper triangle mirrored)."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {arr.shape}")
    return np.triu(arr) + np.triu(arr, 1).T


def check_symmetric(a, tol: float = 1e-10) -> np.ndarray:
    """Validate near-symmetry and return the exactly symmetrized copy."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {arr.shape}")
    scale = max(1.0, float(np.max(np.abs(arr))))
    gap = float(np.max(np.abs(arr - arr.T)))
    if gap > tol * scale:
        raise NotSymmetricError(f"matrix is not symmetric: max |a_ij - a_ji| = {gap:g}")
    return symmetrize(arr)


def eigen_decompose(a, tol: float = TOL_EIG, max_sweeps: int = 64):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(w, v)`` with eigenvalues ``w`` descending and orthonormal
    eigenvectors in the columns of ``v``.  Deterministic: fixed row-major sweep
    order, stable descending sort, and the first component of each eigenvector
    larger than 1e-12 in magnitude is made positive.
    """
    a = check_symmetric(a)
    n = a.shape[0]
    v = np.eye(n)
    scale = max(1.0, float(np.linalg.norm(a)))
    if n == 1:
        return a[0, :1].copy(), v

    converged = False
    for _ in range(max_sweeps):
        off = float(np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2)))
        if off <= tol * scale:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app, aqq = a[p, p], a[q, q]
                tau = (aqq - app) / (2.0 * apq)
                t = (1.0 if tau >= 0.0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rot = np.array([[c, s], [-s, c]])
                pq = (p, q)
                a[pq, :] = rot.T @ a[pq, :]
                a[:, pq] = a[:, pq] @ rot
                # closed forms for the rotated 2x2 block; kills rounding residue
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                v[:, pq] = v[:, pq] @ rot
    else:
        converged = False
    if not converged:
        off = float(np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2)))
        if off > tol * scale:
            raise NumericalError(
                f"Jacobi sweep did not converge after {max_sweeps} sweeps "
                f"(off-diagonal norm {off:g})"
            )

    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = v[:, order]
    for j in range(n):
        col = v[:, j]
        nz = np.nonzero(np.abs(col) > 1e-12)[0]
        if nz.size and col[nz[0]] < 0.0:
            v[:, j] = -col
    return w, v


def matrix_power(a, r: float) -> np.ndarray:
    """Symmetric power ``U diag(w**r) U^t`` of a positive definite matrix."""
    w, v = eigen_decompose(a)
    if w[-1] <= TOL_PD:
        raise NotPositiveDefiniteError(
            f"matrix_power requires eigenvalues > {TOL_PD:g}, smallest is {w[-1]:g}"
        )
    return symmetrize(v @ np.diag(w ** r) @ v.T)


def eta_bounds(a) -> tuple[float, float]:
    """Smallest and largest eigenvalue of a symmetric matrix.

    Also checks the entry bound max |a_ij| <= eta_max, which holds for every
    symmetric positive semi-definite matrix; for general symmetric input the
    check uses the spectral radius.
    """
    arr = check_symmetric(a)
    w, _ = eigen_decompose(arr)
    eta_min, eta_max = float(w[-1]), float(w[0])
    radius = max(abs(eta_min), abs(eta_max))
    if float(np.max(np.abs(arr))) > radius + 1e-9:
        raise NumericalError("entry bound |a_ij| <= spectral radius failed")
    return eta_min, eta_max


def in_band(a, band: Band, tol: float = TOL_BAND) -> bool:
    """True iff all eigenvalues lie in [band.a, band.b], tolerance outward."""
    eta_min, eta_max = eta_bounds(a)
    return (band.a - tol <= eta_min) and (eta_max <= band.b + tol)


def entrywise_within(a, b, eps: float) -> bool:
    """True iff max |a_ij - b_ij| <= eps (the entrywise perturbation class)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.max(np.abs(a - b))) <= eps


def random_in_band(band: Band, rng: np.random.Generator) -> np.ndarray:
    """Random symmetric matrix with eigenvalues drawn uniformly in the band.

    Uses a Haar-ish orthogonal factor from QR of a Gaussian matrix; the result
    is exactly symmetric and lies in the band by construction.
    """
    m = band.m
    g = rng.standard_normal((m, m))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diag(r))
    w = rng.uniform(band.a, band.b, size=m)
    return symmetrize(q @ np.diag(w) @ q.T)


def random_entrywise(m: int, eps: float, rng: np.random.Generator) -> np.ndarray:
    """Random symmetric matrix with entries uniform in [-eps, eps]."""
    return symmetrize(rng.uniform(-eps, eps, size=(m, m)))
