"""Lattice rounding and the three-family decomposition of band matrices.

A target matrix G with eigenvalues in [a, b] is written as a positive
combination of (1) a finite family of lattice matrices with entries in
gamma * Z and eigenvalues in [a/2, 2b], (2) the single-diagonal-entry
correctors, and (3) the pair correctors with ones at (u,u), (u,v), (v,u),
(v,v).  The combination reproduces G exactly and its weights obey fixed
closed-form bounds, which is what the later recursion needs.

Basis construction offers two modes.  ``subset`` keeps one lattice matrix
per distinct rounding of the supplied targets; the weight bounds only use
that every kept matrix has entries bounded by 2b and that the small weights
carry a 1/(2bL) factor, so any list containing the roundings works.
``enumerate`` generates the full lattice family behind a hard cap; the count
is astronomically large for all but toy parameters.

All lattice arithmetic runs in integer units of gamma to avoid drift.
Values within 1e-9 grid units of a lattice point snap onto it, making the
left-closed rounding well defined in floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import (
    BasisIncompleteError,
    ConfigurationError,
    EnumerationInfeasibleError,
    InternalConsistencyError,
    OutOfBandError,
)
from .matrices import Band, check_symmetric, eta_bounds, in_band, symmetrize

#: values within this many gamma-units of an integer snap onto the lattice
SNAP_TOL = 1e-9

DEFAULT_ENUMERATION_CAP = 10 ** 6


@dataclass(frozen=True)
class LatticeParams:
    band: Band
    gamma: float

    def __post_init__(self):
        expect = self.band.a / (20.0 * self.band.m ** 2)
        if abs(self.gamma - expect) > 1e-15 * expect:
            raise ConfigurationError(
                f"gamma must equal a / (20 m^2) = {expect:g}, got {self.gamma:g}"
            )


def lattice_params(band: Band) -> LatticeParams:
    if band.m < 2:
        raise ConfigurationError(
            f"the construction requires dimension m >= 2, got {band.m}"
        )
    return LatticeParams(band, band.a / (20.0 * band.m ** 2))


def pair_indices(m: int) -> list[tuple[int, int]]:
    """Ordered index pairs (u, v) with u < v, 0-based, lexicographic."""
    return [(u, v) for u in range(m) for v in range(u + 1, m)]


def single_corrector(m: int, u: int) -> np.ndarray:
    q = np.zeros((m, m))
    q[u, u] = 1.0
    return q


def pair_corrector(m: int, u: int, v: int) -> np.ndarray:
    q = np.zeros((m, m))
    q[u, u] = q[u, v] = q[v, u] = q[v, v] = 1.0
    return q


@dataclass(frozen=True, eq=False)
class BasisSet:
    """Lattice matrices q1 plus the diagonal and pair correctors."""

    q1: tuple
    q2: tuple
    q3: tuple
    pairs: tuple
    lat: LatticeParams
    index_of: dict  # integer lattice key of a q1 matrix -> its position
    q1_sum: np.ndarray = None  # sum of all q1 matrices, for O(1) decomposition

    @property
    def L(self) -> int:
        return len(self.q1)

    @property
    def m(self) -> int:
        return self.lat.band.m


@dataclass(frozen=True, eq=False)
class CoeffArray:
    """Positive weights of the three families, index-aligned with a BasisSet."""

    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray


def lattice_key(h: np.ndarray, gamma: float) -> tuple:
    """Integer upper-triangle representation of a lattice matrix."""
    m = h.shape[0]
    return tuple(
        int(round(h[i, j] / gamma)) for i in range(m) for j in range(i, m)
    )


def round_to_H(g, lat: LatticeParams) -> np.ndarray:
    """Round a band matrix down onto the lattice, with the fixed offsets.

    Diagonal entries drop by 8m grid steps and off-diagonal entries by 3,
    which keeps the result inside the widened band [a/2, 2b] for every input
    in [a, b]; a failed output band check signals an out-of-band input.
    """
    band = lat.band
    g = check_symmetric(g)
    if not in_band(g, band):
        lo, hi = eta_bounds(g)
        raise OutOfBandError(
            f"matrix eigenvalues [{lo:g}, {hi:g}] leave the band "
            f"[{band.a:g}, {band.b:g}]"
        )
    m = band.m
    gamma = lat.gamma
    kappa = np.floor(g / gamma + SNAP_TOL)
    shift = np.full((m, m), 3.0)
    np.fill_diagonal(shift, 8.0 * m)
    h = symmetrize((kappa - shift) * gamma)
    if not in_band(h, Band(m, band.a / 2.0, 2.0 * band.b)):
        raise InternalConsistencyError(
            "rounded matrix left the widened band; input was not in [a, b]"
        )
    return h


def build_basis(targets, lat: LatticeParams, mode: str = "subset",
                enumeration_cap: int = DEFAULT_ENUMERATION_CAP) -> BasisSet:
    """Assemble the basis for a target list, in subset or enumerate mode."""
    band = lat.band
    m = band.m
    if mode == "subset":
        q1: list[np.ndarray] = []
        index_of: dict = {}
        for g in targets:
            h = round_to_H(g, lat)
            key = lattice_key(h, lat.gamma)
            if key not in index_of:
                index_of[key] = len(q1)
                q1.append(h)
        if not q1:
            raise ConfigurationError("at least one target is required")
    elif mode == "enumerate":
        half = int(np.floor(2.0 * band.b / lat.gamma))
        n_entries = m * (m + 1) // 2
        count = (2 * half + 1) ** n_entries
        if count > enumeration_cap:
            raise EnumerationInfeasibleError(
                f"full lattice enumeration needs {count} candidates, "
                f"above the cap {enumeration_cap}"
            )
        wide = Band(m, band.a / 2.0, 2.0 * band.b)
        q1, index_of = [], {}
        values = np.arange(-half, half + 1) * lat.gamma
        iu = np.triu_indices(m)
        for combo in product(values, repeat=n_entries):
            h = np.zeros((m, m))
            h[iu] = combo
            h = symmetrize(h)
            if in_band(h, wide):
                index_of[lattice_key(h, lat.gamma)] = len(q1)
                q1.append(h)
        if not q1:
            raise InternalConsistencyError("lattice enumeration found no matrices")
    else:
        raise ConfigurationError(f"unknown basis mode {mode!r}")

    pairs = pair_indices(m)
    return BasisSet(
        q1=tuple(q1),
        q2=tuple(single_corrector(m, u) for u in range(m)),
        q3=tuple(pair_corrector(m, u, v) for u, v in pairs),
        pairs=tuple(pairs),
        lat=lat,
        index_of=index_of,
        q1_sum=sum(q1),
    )


def decompose(g, basis: BasisSet, lat: LatticeParams) -> CoeffArray:
    """Weights reproducing g over the basis, with their closed-form bounds.

    The rounded matrix of g gets weight one and every other lattice matrix
    the floor gamma/(2bL); the pair and diagonal correctors then absorb the
    remainder entry by entry.  Violated bounds or a reconstruction error
    above 1e-10 indicate an arithmetic bug, never an expected state.
    """
    band = lat.band
    m = band.m
    gamma = lat.gamma
    g = check_symmetric(g)
    h = round_to_H(g, lat)
    key = lattice_key(h, gamma)
    if key not in basis.index_of:
        raise BasisIncompleteError(
            "rounded target is missing from the basis; rebuild the basis "
            "with this target included"
        )
    sel = basis.index_of[key]

    L = basis.L
    floor = gamma / (2.0 * band.b * L)
    c1 = np.full(L, floor)
    c1[sel] = 1.0

    s = floor * (basis.q1_sum - basis.q1[sel])

    c3 = np.array([(g[u, v] - h[u, v]) - s[u, v] for u, v in basis.pairs])
    c2 = np.empty(m)
    for u in range(m):
        paired = sum(
            c3[i] for i, (x, y) in enumerate(basis.pairs) if u in (x, y)
        )
        c2[u] = (g[u, u] - h[u, u]) - s[u, u] - paired

    coeffs = CoeffArray(c1=c1, c2=c2, c3=c3)
    report = verify_decomposition(g, basis, coeffs)
    if not report.all_ok:
        raise InternalConsistencyError(
            "decomposition bounds failed: "
            + "; ".join(e["name"] for e in report.entries if not e["ok"])
        )
    return coeffs


@dataclass(frozen=True)
class DecompositionReport:
    recon_error: float
    entries: tuple
    all_ok: bool


def reconstruct(basis: BasisSet, coeffs: CoeffArray) -> np.ndarray:
    out = np.tensordot(coeffs.c1, np.stack(basis.q1), axes=1)
    out += np.tensordot(coeffs.c2, np.stack(basis.q2), axes=1)
    if basis.q3:
        out += np.tensordot(coeffs.c3, np.stack(basis.q3), axes=1)
    return out


def verify_decomposition(g, basis: BasisSet, coeffs: CoeffArray,
                         recon_tol: float = 1e-10,
                         bound_tol: float = 1e-12) -> DecompositionReport:
    """Independent recomputation of the reconstruction and weight bounds."""
    band = basis.lat.band
    gamma = basis.lat.gamma
    m = band.m
    g = check_symmetric(g)
    err = float(np.max(np.abs(g - reconstruct(basis, coeffs))))
    entries = [
        {
            "name": "reconstruction",
            "value": err,
            "low": 0.0,
            "high": recon_tol,
            "slack": recon_tol - err,
            "ok": err <= recon_tol,
        }
    ]

    def bound(name, values, lo, hi):
        for i, val in enumerate(np.atleast_1d(values)):
            ok = lo - bound_tol <= val <= hi + bound_tol
            entries.append(
                {
                    "name": f"{name}[{i}]",
                    "value": float(val),
                    "low": lo,
                    "high": hi,
                    "slack": float(min(val - lo, hi - val)),
                    "ok": bool(ok),
                }
            )

    bound("c1", coeffs.c1, gamma / (2.0 * band.b * basis.L), 1.0)
    bound("c2", coeffs.c2, 2.0 * m * gamma, 10.0 * m * gamma)
    bound("c3", coeffs.c3, 2.0 * gamma, 5.0 * gamma)
    all_ok = all(e["ok"] for e in entries)
    return DecompositionReport(recon_error=err, entries=tuple(entries), all_ok=all_ok)
