"""Finite-window dependence estimates via Gaussian canonical correlations.

For jointly Gaussian windows, the maximal correlation between the linear
spans equals the top canonical correlation of the whitened cross-covariance,
and the mutual information is -1/2 sum log(1 - r_i^2) over all canonical
correlations.  Window estimates are certified lower bounds of the
sigma-field coefficients (suprema over infinite pasts and futures); they are
always labeled as such in reports.

Whitening uses the symmetric inverse square root from the matrix core so the
whole chain shares one eigensolver.  Everything here is pure given the
autocovariance tables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigurationError,
    DegenerateWindowError,
    NotPositiveDefiniteError,
    TableTooShortError,
)
from .matrices import matrix_power
from .sampling import ProcessSpec

#: canonical correlations are clipped into [0, 1 - CORR_CLIP]
CORR_CLIP = 1e-12

LOWER_BOUND_CAVEAT = (
    "window estimates are lower bounds for the sigma-field dependence "
    "coefficients; they are computed from finite past/future windows only"
)


@dataclass(frozen=True)
class WindowSpec:
    """Past window length, gap, and future window length."""

    past: int
    gap: int
    future: int

    def __post_init__(self):
        if self.past < 1 or self.future < 1 or self.gap < 1:
            raise ConfigurationError(
                f"window requires past, future, gap >= 1, got {self}"
            )


@dataclass(frozen=True, eq=False)
class CanonicalCorrelations:
    r: np.ndarray
    clipped: bool


def scalar_window_cov(r: np.ndarray, w: WindowSpec):
    """Joint covariance blocks of two windows of a scalar sequence.

    Returns (past block, future block, cross block); the largest lag used is
    gap + past + future - 2.
    """
    r = np.asarray(r, dtype=float)
    need = w.gap + w.past + w.future - 1
    if len(r) < need:
        raise TableTooShortError(
            f"need autocovariances up to lag {need - 1}, table has {len(r) - 1}"
        )
    idx = np.abs(np.subtract.outer(np.arange(w.past), np.arange(w.past)))
    a = r[idx]
    idx = np.abs(np.subtract.outer(np.arange(w.future), np.arange(w.future)))
    b = r[idx]
    lags = w.gap + np.arange(w.future)[None, :] + np.arange(w.past)[::-1][:, None]
    c = r[lags]
    return a, b, c


def process_autocov(spec: ProcessSpec, kmax: int) -> np.ndarray:
    """Matrix autocovariances R(k) of the assembled process, k = 0..kmax.

    Exact from the block tables and the assembly: the lattice terms
    contribute r(k) times the lattice matrix (the square root conjugation of
    a scalar identity covariance), the correctors r(k) times themselves.
    """
    basis = spec.basis
    m = spec.m
    out = np.zeros((kmax + 1, m, m))

    def padded(table):
        r = np.zeros(kmax + 1)
        upto = min(kmax + 1, len(table.r))
        r[:upto] = table.r[:upto]
        return r

    for ell in range(basis.L):
        r = padded(spec.tables[("q1", ell)])
        out += r[:, None, None] * basis.q1[ell][None, :, :]
    for u in range(m):
        r = padded(spec.tables[("q2", u)])
        out += r[:, None, None] * basis.q2[u][None, :, :]
    for i, (u, v) in enumerate(basis.pairs):
        r = padded(spec.tables[("q3", u, v)])
        out += r[:, None, None] * basis.q3[i][None, :, :]
    return out


def vector_window_cov(rmats: np.ndarray, w: WindowSpec):
    """Joint covariance blocks of two windows of an m-vector sequence.

    ``rmats`` holds R(k) for k = 0..kmax; R(-k) = R(k) here because every
    block autocovariance is even and the basis matrices are symmetric.
    """
    kmax, m, _ = rmats.shape[0] - 1, rmats.shape[1], rmats.shape[2]
    need = w.gap + w.past + w.future - 1
    if kmax + 1 < need:
        raise TableTooShortError(
            f"need matrix autocovariances up to lag {need - 1}, have {kmax}"
        )

    def block(rows, cols, lag_of):
        out = np.zeros((rows * m, cols * m))
        for i in range(rows):
            for j in range(cols):
                out[i * m:(i + 1) * m, j * m:(j + 1) * m] = rmats[abs(lag_of(i, j))]
        return out

    a = block(w.past, w.past, lambda i, j: i - j)
    b = block(w.future, w.future, lambda i, j: i - j)
    c = block(w.past, w.future, lambda i, j: w.gap + j + (w.past - 1 - i))
    return a, b, c


def _whitener(block) -> np.ndarray:
    try:
        return matrix_power(block, -0.5)
    except NotPositiveDefiniteError as exc:
        raise DegenerateWindowError(f"window block is singular: {exc}") from exc


def _corrs_whitened(wa, wb, c) -> CanonicalCorrelations:
    s = np.linalg.svd(wa @ c @ wb, compute_uv=False)
    clipped = bool(np.any(s > 1.0 - CORR_CLIP))
    return CanonicalCorrelations(
        r=np.clip(s, 0.0, 1.0 - CORR_CLIP), clipped=clipped
    )


def canonical_corrs(a, b, c) -> CanonicalCorrelations:
    """Singular values of the whitened cross block, descending, clipped."""
    wa = _whitener(a)
    # past and future blocks coincide for equal window lengths
    wb = wa if np.array_equal(a, b) else _whitener(b)
    return _corrs_whitened(wa, wb, c)


def _corrs_scalar(r, w: WindowSpec) -> CanonicalCorrelations:
    return canonical_corrs(*scalar_window_cov(r, w))


def _corrs_vector(rmats, w: WindowSpec) -> CanonicalCorrelations:
    return canonical_corrs(*vector_window_cov(rmats, w))


def mi_of_corrs(corrs: CanonicalCorrelations) -> float:
    return max(0.0, float(-0.5 * np.sum(np.log1p(-corrs.r ** 2))))


def rho_hat(r, w: WindowSpec) -> float:
    """Top canonical correlation of the windows of a scalar sequence."""
    return float(_corrs_scalar(r, w).r[0])


def mi_hat(r, w: WindowSpec) -> float:
    """Gaussian mutual information of the windows of a scalar sequence."""
    return mi_of_corrs(_corrs_scalar(r, w))


def rho_hat_vector(rmats, w: WindowSpec) -> float:
    return float(_corrs_vector(rmats, w).r[0])


def mi_hat_vector(rmats, w: WindowSpec) -> float:
    return mi_of_corrs(_corrs_vector(rmats, w))


def stacked_pair_mi(ra, rb, w: WindowSpec) -> float:
    """Mutual information of the stacked windows of two independent scalar
    sequences, computed from the block-diagonal joint covariance."""
    aa, ba, ca = scalar_window_cov(ra, w)
    ab, bb, cb = scalar_window_cov(rb, w)
    p, q = w.past, w.future
    a = np.zeros((2 * p, 2 * p))
    a[:p, :p], a[p:, p:] = aa, ab
    b = np.zeros((2 * q, 2 * q))
    b[:q, :q], b[q:, q:] = ba, bb
    c = np.zeros((2 * p, 2 * q))
    c[:p, :q], c[p:, q:] = ca, cb
    return mi_of_corrs(canonical_corrs(a, b, c))


@dataclass(frozen=True)
class CompositionReport:
    gap: int
    rho_process: float
    rho_blocks_max: float
    rho_ok: bool
    mi_process: float
    mi_blocks_sum: float
    mi_ok: bool
    additivity_gap: float
    additivity_ok: bool
    per_block: dict


def block_table_list(spec: ProcessSpec):
    """(label, table, multiplicity) for every independent scalar stream."""
    basis = spec.basis
    out = []
    for ell in range(basis.L):
        out.append((f"q1[{ell}]", spec.tables[("q1", ell)], spec.m))
    for u in range(spec.m):
        out.append((f"q2[{u}]", spec.tables[("q2", u)], 1))
    for u, v in basis.pairs:
        out.append((f"q3[{u},{v}]", spec.tables[("q3", u, v)], 1))
    return out


def composition_checks(spec: ProcessSpec, w: WindowSpec,
                       tol: float = 1e-9,
                       additivity_tol: float = 1e-10) -> CompositionReport:
    """Window-level composition inequalities of the assembled process.

    The process window spans are contained in the stacked block spans, so
    the process maximal correlation cannot exceed the best block value and
    the process mutual information cannot exceed the block sum (counting the
    lattice blocks once per coordinate).  Also checks exact additivity of
    mutual information over two independent blocks.
    """
    need = w.gap + w.past + w.future - 1
    rmats = process_autocov(spec, need)
    rho_x = rho_hat_vector(rmats, w)
    mi_x = mi_hat_vector(rmats, w)

    per_block = {}
    rho_max = 0.0
    mi_sum = 0.0
    blocks = block_table_list(spec)
    for label, table, mult in blocks:
        r = np.zeros(need + 1)
        upto = min(need + 1, len(table.r))
        r[:upto] = table.r[:upto]
        rho_b = rho_hat(r, w)
        mi_b = mi_hat(r, w)
        per_block[label] = {"rho": rho_b, "mi": mi_b, "multiplicity": mult}
        rho_max = max(rho_max, rho_b)
        mi_sum += mult * mi_b

    def pad(table):
        r = np.zeros(need + 1)
        upto = min(need + 1, len(table.r))
        r[:upto] = table.r[:upto]
        return r

    ra, rb = pad(blocks[0][1]), pad(blocks[-1][1])
    stacked = stacked_pair_mi(ra, rb, w)
    parts = mi_hat(ra, w) + mi_hat(rb, w)
    additivity_gap = abs(stacked - parts)

    return CompositionReport(
        gap=w.gap,
        rho_process=rho_x,
        rho_blocks_max=rho_max,
        rho_ok=rho_x <= rho_max + tol,
        mi_process=mi_x,
        mi_blocks_sum=mi_sum,
        mi_ok=mi_x <= mi_sum + tol,
        additivity_gap=additivity_gap,
        additivity_ok=additivity_gap <= additivity_tol,
        per_block=per_block,
    )


def decay_scan(spec: ProcessSpec, past: int, future: int, gaps) -> dict:
    """Process-level rho and mutual information over a ladder of gaps.

    The window diagonal blocks do not depend on the gap, so they are
    whitened once for the whole ladder.
    """
    gaps = sorted(set(int(g) for g in gaps))
    need = max(gaps) + past + future - 1
    rmats = process_autocov(spec, need)
    w0 = WindowSpec(past, gaps[0], future)
    a, b, _ = vector_window_cov(rmats, w0)
    wa = _whitener(a)
    wb = wa if np.array_equal(a, b) else _whitener(b)
    rho = []
    mi = []
    for g in gaps:
        _, _, c = vector_window_cov(rmats, WindowSpec(past, g, future))
        corrs = _corrs_whitened(wa, wb, c)
        rho.append(float(corrs.r[0]))
        mi.append(mi_of_corrs(corrs))
    return {
        "gaps": gaps,
        "rho": rho,
        "mi": mi,
        "caveat": LOWER_BOUND_CAVEAT,
    }


def block_decay_scan(table, past: int, future: int, gaps) -> dict:
    """Same ladder for one scalar block table."""
    gaps = sorted(set(int(g) for g in gaps))
    need = max(gaps) + past + future - 1
    r = np.zeros(need + 1)
    upto = min(need + 1, len(table.r))
    r[:upto] = table.r[:upto]
    w0 = WindowSpec(past, gaps[0], future)
    a, b, _ = scalar_window_cov(r, w0)
    wa = _whitener(a)
    wb = wa if np.array_equal(a, b) else _whitener(b)
    rho = []
    mi = []
    for g in gaps:
        _, _, c = scalar_window_cov(r, WindowSpec(past, g, future))
        corrs = _corrs_whitened(wa, wb, c)
        rho.append(float(corrs.r[0]))
        mi.append(mi_of_corrs(corrs))
    return {"gaps": gaps, "rho": rho, "mi": mi, "caveat": LOWER_BOUND_CAVEAT}
