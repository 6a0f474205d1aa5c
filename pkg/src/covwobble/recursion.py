"""Level recursion producing the spectral functions of the building blocks
and the exact covariance matrices of the normalized block sums.

Level n holds one cosine polynomial per basis element and corrector, each
strictly inside the band (upsilon1, upsilon2) with smoothness below delta
("the working condition").  Advancing a level moves every function's value
at 0 onto the log of its weight in the decomposition of the next target,
with tolerance 2^-n, while keeping all Fejer means up to the current block
length N_n essentially unchanged.  The block lengths grow by the Fejer order
needed to certify accuracy 2^-n for the current functions.

After the final level R, the starred weights are the Fejer means of the
depth-R densities at the block lengths N_n; their distance to the plain
weights obeys the 7 * 2^-n bound, and the weighted basis sums reproduce the
targets entrywise within 2^-n * theta_big.

Levels are sequential; within a level the per-function constructions are
independent.  A level failure aborts the run and returns the partial result
with diagnostics instead of raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, CovwobbleError, OutOfBandError
from .lattice import (
    BasisSet,
    CoeffArray,
    LatticeParams,
    build_basis,
    decompose,
    lattice_params,
)
from .matrices import Band, check_symmetric, eta_bounds, in_band
from .perturb import (
    CoefficientScheme,
    PerturbRequest,
    PerturbResult,
    construct_h,
)
from .spectral import (
    ZERO_SERIES,
    CosineSeries,
    ExpFejerTable,
    GridSpec,
    eval_on_grid,
    psi,
)


@dataclass(frozen=True)
class ConstructionConfig:
    band: Band
    targets: tuple
    depth: int = 6
    tau: float = 0.5
    delta: float = 0.5
    scheme: CoefficientScheme = CoefficientScheme()
    grid: GridSpec = GridSpec()
    fejer_scan_cap: int = 2 ** 18
    basis_mode: str = "subset"

    def __post_init__(self):
        if self.depth < 1:
            raise ConfigurationError(f"depth must be >= 1, got {self.depth}")
        if not 0.0 < self.tau < 1.0:
            raise ConfigurationError(f"tau must lie in (0, 1), got {self.tau}")
        if self.delta <= 0.0:
            raise ConfigurationError(f"delta must be positive, got {self.delta}")
        if not self.targets:
            raise ConfigurationError("at least one target matrix is required")
        checked = []
        for idx, g in enumerate(self.targets):
            g = check_symmetric(g)
            if g.shape[0] != self.band.m:
                raise ConfigurationError(
                    f"target {idx} has dimension {g.shape[0]}, band has {self.band.m}"
                )
            if not in_band(g, self.band):
                lo, hi = eta_bounds(g)
                raise OutOfBandError(
                    f"target {idx} has eigenvalues [{lo:g}, {hi:g}] outside "
                    f"[{self.band.a:g}, {self.band.b:g}]"
                )
            checked.append(g)
        object.__setattr__(self, "targets", tuple(checked))

    def target_for_level(self, n: int) -> np.ndarray:
        """The level-n target; the finite list repeats cyclically."""
        return self.targets[(n - 1) % len(self.targets)]


@dataclass(frozen=True)
class RecursionConstants:
    gamma: float
    L: int
    upsilon1: float
    upsilon2: float
    delta_effective: float
    theta_big: float


def init_constants(cfg: ConstructionConfig, basis: BasisSet) -> RecursionConstants:
    """Band and size constants of the run.

    The wobble constant theta_big bounds how an entrywise weight error
    propagates through the weighted basis sums: lattice entries are at most
    2b and correctors at most 1, so one unit of weight error moves entries by
    at most 2bL + m + m(m-1)/2, and the weight errors carry the factor 7.
    """
    band = cfg.band
    m = band.m
    upsilon1 = math.log(basis.lat.gamma / (3.0 * band.b * basis.L))
    theta_big = 7.0 * (2.0 * band.b * basis.L + m + m * (m - 1) / 2.0)
    return RecursionConstants(
        gamma=basis.lat.gamma,
        L=basis.L,
        upsilon1=upsilon1,
        upsilon2=math.log(2.0),
        delta_effective=cfg.delta,
        theta_big=theta_big,
    )


def function_keys(basis: BasisSet) -> list:
    keys = [("q1", ell) for ell in range(basis.L)]
    keys += [("q2", u) for u in range(basis.m)]
    keys += [("q3", u, v) for u, v in basis.pairs]
    return keys


def coeff_of(coeffs: CoeffArray, basis: BasisSet, key) -> float:
    kind = key[0]
    if kind == "q1":
        return float(coeffs.c1[key[1]])
    if kind == "q2":
        return float(coeffs.c2[key[1]])
    return float(coeffs.c3[basis.pairs.index((key[1], key[2]))])


@dataclass
class LevelState:
    """Functions of one level together with its block length.

    ``n_prev_length`` is the previous block length N_{n-1}; ``length`` is
    N_n, already advanced by the worst Fejer rank of the current functions
    at tolerance 2^-n.
    """

    n: int
    n_prev_length: int
    length: int
    functions: dict
    records: dict = field(default_factory=dict)
    condition: dict = field(default_factory=dict)


def _condition_entry(f: CosineSeries, constants: RecursionConstants,
                     grid: GridSpec) -> dict:
    vals = eval_on_grid(f, grid)
    return {
        "band_slack": float(
            min(np.min(vals) - constants.upsilon1, constants.upsilon2 - np.max(vals))
        ),
        "psi": psi(f),
        "psi_slack": constants.delta_effective - psi(f),
    }


def _check_condition(state: LevelState, constants: RecursionConstants,
                     grid: GridSpec) -> None:
    for key, f in state.functions.items():
        entry = _condition_entry(f, constants, grid)
        state.condition[key] = entry
        if entry["band_slack"] <= 0.0 or entry["psi_slack"] <= 0.0:
            raise ConfigurationError(
                f"level {state.n} function {key} violates the working "
                f"condition (band slack {entry['band_slack']:g}, "
                f"psi slack {entry['psi_slack']:g})"
            )


def _rank_cap(cfg: ConstructionConfig) -> int:
    return min(cfg.fejer_scan_cap, cfg.grid.size // 4)


def _advance_length(n_prev_length: int, n: int, functions: dict,
                    cfg: ConstructionConfig) -> int:
    cap = _rank_cap(cfg)
    worst = 1
    for f in functions.values():
        worst = max(worst, ExpFejerTable(f, cfg.grid).rank(2.0 ** -n, cap))
    return n_prev_length + worst


def init_level(cfg: ConstructionConfig, constants: RecursionConstants,
               basis: BasisSet) -> LevelState:
    """Level 1: every function is the zero polynomial and N_0 = 1."""
    functions = {key: ZERO_SERIES for key in function_keys(basis)}
    state = LevelState(
        n=1,
        n_prev_length=1,
        length=_advance_length(1, 1, functions, cfg),
        functions=functions,
    )
    _check_condition(state, constants, cfg.grid)
    return state


def advance_level(state: LevelState, cfg: ConstructionConfig,
                  constants: RecursionConstants, basis: BasisSet,
                  coeffs_next: CoeffArray) -> LevelState:
    """Build level n+1 from level n and the next target's weights."""
    n = state.n
    eps = 2.0 ** -n
    functions: dict = {}
    records: dict = {}
    for key, f in state.functions.items():
        theta = math.log(coeff_of(coeffs_next, basis, key))
        req = PerturbRequest(
            f=f,
            upsilon1=constants.upsilon1,
            upsilon2=constants.upsilon2,
            theta=theta,
            delta=constants.delta_effective,
            eps=eps,
            fejer_cap=state.length,
        )
        try:
            res: PerturbResult = construct_h(req, cfg.scheme, cfg.grid)
        except CovwobbleError as exc:
            raise type(exc)(f"level {n}, function {key}: {exc}") from exc
        functions[key] = res.h
        records[key] = res
    nxt = LevelState(
        n=n + 1,
        n_prev_length=state.length,
        length=_advance_length(state.length, n + 1, functions, cfg),
        functions=functions,
        records=records,
    )
    _check_condition(nxt, constants, cfg.grid)
    return nxt


@dataclass
class LevelBounds:
    n: int
    length: int
    coeff_gap: float
    coeff_bound: float
    coeff_bound_padded: float
    coeff_ok: bool
    entry_gap: float
    entry_bound: float
    entry_ok: bool
    eigen_ratio: float
    positive_definite: bool


@dataclass
class ConstructionResult:
    cfg: ConstructionConfig
    lat: LatticeParams
    basis: BasisSet
    constants: RecursionConstants
    coeffs: list            # CoeffArray of the level-n target, n = 1..depth
    levels: list            # LevelState, n = 1..<completed depth>
    lengths: list           # N_n for n = 1..<completed depth>
    cstar: list             # dict key -> starred weight, n = 1..<completed depth>
    gstar: list             # weighted basis sum per level
    bounds: list            # LevelBounds, n = 2..<completed depth>
    ok: bool
    abort_level: int | None = None
    abort_reason: str | None = None

    def functions(self) -> dict:
        return self.levels[-1].functions if self.levels else {}

    def max_eigen_ratio(self) -> float:
        return max((b.eigen_ratio for b in self.bounds), default=float("nan"))


def exact_block_cov(result: ConstructionResult, n: int) -> np.ndarray:
    """Covariance of the normalized length-N_n block sum: the weighted sum
    of basis matrices with the starred weights of level n."""
    if not 1 <= n <= len(result.gstar):
        raise ConfigurationError(
            f"level {n} not computed; available levels are 1..{len(result.gstar)}"
        )
    return result.gstar[n - 1]


def assemble_weighted(basis: BasisSet, weights: dict) -> np.ndarray:
    """Weighted sum of the basis matrices and correctors."""
    m = basis.m
    out = np.zeros((m, m))
    for ell in range(basis.L):
        out += weights[("q1", ell)] * basis.q1[ell]
    for u in range(m):
        out += weights[("q2", u)] * basis.q2[u]
    for i, (u, v) in enumerate(basis.pairs):
        out += weights[("q3", u, v)] * basis.q3[i]
    return out


def evaluate_bounds(result: "ConstructionResult") -> list:
    """Recompute the per-level bound checks from the stored weights.

    Used after fault injection as well: corrupting a starred weight and
    re-evaluating flags exactly the bounds it breaks.
    """
    cfg = result.cfg
    basis = result.basis
    constants = result.constants
    keys = function_keys(basis)
    bounds = []
    for n in range(2, len(result.cstar) + 1):
        weights = result.cstar[n - 1]
        plain = result.coeffs[n - 1]
        gap = max(abs(weights[key] - coeff_of(plain, basis, key)) for key in keys)
        coeff_bound = 7.0 * 2.0 ** -n
        padded = coeff_bound + 3.0 * 2.0 ** -cfg.depth
        target = cfg.target_for_level(n)
        entry_gap = float(np.max(np.abs(result.gstar[n - 1] - target)))
        entry_bound = 2.0 ** -n * constants.theta_big
        lo, hi = eta_bounds(result.gstar[n - 1])
        bounds.append(
            LevelBounds(
                n=n,
                length=result.lengths[n - 1],
                coeff_gap=gap,
                coeff_bound=coeff_bound,
                coeff_bound_padded=padded,
                coeff_ok=gap <= coeff_bound,
                entry_gap=entry_gap,
                entry_bound=entry_bound,
                entry_ok=entry_gap <= entry_bound,
                eigen_ratio=hi / lo if lo > 0 else float("inf"),
                positive_definite=lo > 0.0,
            )
        )
    return bounds


def run_recursion(cfg: ConstructionConfig) -> ConstructionResult:
    """Run the full recursion to the configured depth and verify the bounds.

    Construction failures (rank horizon exhausted, no passing bump) abort
    the loop and surface in ``abort_level`` / ``abort_reason``; everything
    computed up to that point is still returned and verified.
    """
    lat = lattice_params(cfg.band)
    basis = build_basis(cfg.targets, lat, mode=cfg.basis_mode)
    constants = init_constants(cfg, basis)

    decomp_cache: dict[int, CoeffArray] = {}

    def coeffs_for_level(n: int) -> CoeffArray:
        idx = (n - 1) % len(cfg.targets)
        if idx not in decomp_cache:
            decomp_cache[idx] = decompose(cfg.targets[idx], basis, lat)
        return decomp_cache[idx]

    levels = [init_level(cfg, constants, basis)]
    abort_level = None
    abort_reason = None
    while levels[-1].n < cfg.depth:
        state = levels[-1]
        try:
            levels.append(
                advance_level(state, cfg, constants, basis,
                              coeffs_for_level(state.n + 1))
            )
        except CovwobbleError as exc:
            abort_level = state.n + 1
            abort_reason = str(exc)
            break

    completed = len(levels)
    lengths = [state.length for state in levels]
    coeffs = [coeffs_for_level(n) for n in range(1, completed + 1)]

    # starred weights are only computable while the block length fits the
    # grid's Fejer validity; on aborted runs deeper levels may not
    usable = completed
    while usable and lengths[usable - 1] > cfg.grid.size // 4:
        usable -= 1
    if usable < completed and abort_level is None:
        abort_level = usable + 1
        abort_reason = (
            f"block length {lengths[usable]} exceeds grid validity "
            f"{cfg.grid.size // 4}"
        )

    keys = function_keys(basis)
    final = levels[-1].functions
    tables = {key: ExpFejerTable(final[key], cfg.grid) for key in keys}
    cstar = []
    for n in range(1, usable + 1):
        cstar.append({key: tables[key].integral(lengths[n - 1]) for key in keys})
    gstar = [assemble_weighted(basis, weights) for weights in cstar]

    result = ConstructionResult(
        cfg=cfg,
        lat=lat,
        basis=basis,
        constants=constants,
        coeffs=coeffs,
        levels=levels,
        lengths=lengths,
        cstar=cstar,
        gstar=gstar,
        bounds=[],
        ok=False,
        abort_level=abort_level,
        abort_reason=abort_reason,
    )
    result.bounds = evaluate_bounds(result)
    result.ok = (
        abort_level is None
        and completed == cfg.depth
        and all(b.coeff_ok and b.entry_ok and b.positive_definite
                for b in result.bounds)
    )
    return result
