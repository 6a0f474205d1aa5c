"""Run configuration: parsing, validation, and normalization.

Configs are JSON documents (or plain dicts) mirroring :class:`RunConfig`.
Validation names the offending field; the classical normalization of the
dependence budget tau into (0, 1) is applied and recorded.  Band endpoints
are taken as given: the worked decomposition constants depend on the exact
value of a, so a = 1 is accepted rather than nudged (boundary values outside
(0, 1] x [1, inf) are flagged in the normalization record but only tau is
changed).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .matrices import Band, check_symmetric, eta_bounds, in_band
from .perturb import SCHEME_VARIANTS, CoefficientScheme
from .recursion import ConstructionConfig
from .spectral import GridSpec

SCHEMA_VERSION = 1

FAULT_NAMES = ("none", "cstar_bump", "c2_bounds")

FORMATS = ("json", "csv", "both")


@dataclass
class RunConfig:
    m: int = 2
    a: float = 1.0
    b: float = 2.0
    targets: list = field(default_factory=lambda: [[[1.0, 0.0], [0.0, 1.0]]])
    tau: float = 0.5
    delta: float = 6.0
    depth: int = 6
    scheme: str = "fejer"
    scheme_cap: int = 1_000_000
    grid_size: int = 2 ** 18
    fejer_scan_cap: int = 2 ** 18
    basis_mode: str = "subset"
    replicates: int = 2000
    mc_level: int = 3
    bernoulli_eps: float = 0.0
    master_seed: int = 20260809
    window_past: int = 64
    window_future: int = 64
    gap_max: int = 1000
    out_dir: str = "covwobble-out"
    formats: str = "both"
    inject_fault: str = "none"
    normalization: dict = field(default_factory=dict)

    def band(self) -> Band:
        return Band(self.m, self.a, self.b)

    def target_arrays(self) -> list:
        return [np.asarray(t, dtype=float) for t in self.targets]

    def construction(self) -> ConstructionConfig:
        return ConstructionConfig(
            band=self.band(),
            targets=tuple(self.target_arrays()),
            depth=self.depth,
            tau=self.tau,
            delta=self.delta,
            scheme=CoefficientScheme(self.scheme, self.scheme_cap),
            grid=GridSpec(self.grid_size),
            fejer_scan_cap=self.fejer_scan_cap,
            basis_mode=self.basis_mode,
        )

    def echo(self) -> dict:
        return asdict(self)


def default_config() -> RunConfig:
    return RunConfig()


def _require(cond: bool, field_name: str, message: str) -> None:
    if not cond:
        raise ValidationError(f"{field_name}: {message}")


def parse_config(source=None, overrides: dict | None = None) -> RunConfig:
    """Build a validated RunConfig from a JSON file path, a dict, or defaults.

    ``overrides`` (CLI flags) are applied on top of the document before
    validation.  Every error names its field; eigenvalues of off-band
    targets are spelled out.
    """
    data: dict = {}
    if source is not None:
        if isinstance(source, (str, Path)):
            path = Path(source)
            _require(path.exists(), "config", f"file not found: {path}")
            data = json.loads(path.read_text())
        elif isinstance(source, dict):
            data = dict(source)
        else:
            raise ValidationError(f"config: unsupported source type {type(source)}")
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})

    cfg = RunConfig()
    known = set(cfg.__dataclass_fields__)
    for key, value in data.items():
        _require(key in known, key, "unknown configuration field")
        setattr(cfg, key, value)

    _require(isinstance(cfg.m, int) and cfg.m >= 2, "m",
             f"dimension must be an integer >= 2, got {cfg.m}")
    _require(cfg.a > 0, "a", f"must be positive, got {cfg.a}")
    _require(cfg.b > cfg.a, "b", f"must exceed a = {cfg.a}, got {cfg.b}")
    _require(cfg.depth >= 1, "depth", f"must be >= 1, got {cfg.depth}")
    _require(cfg.scheme in SCHEME_VARIANTS, "scheme",
             f"must be one of {SCHEME_VARIANTS}, got {cfg.scheme!r}")
    _require(cfg.delta > 0, "delta", f"must be positive, got {cfg.delta}")
    _require(cfg.tau > 0, "tau", f"must be positive, got {cfg.tau}")
    _require(cfg.replicates >= 100, "replicates",
             f"must be >= 100, got {cfg.replicates}")
    _require(cfg.mc_level >= 1, "mc_level", f"must be >= 1, got {cfg.mc_level}")
    _require(int(cfg.master_seed) >= 0, "master_seed", "must be nonnegative")
    _require(cfg.window_past >= 1 and cfg.window_future >= 1, "window_past",
             "window lengths must be >= 1")
    _require(cfg.gap_max >= 1, "gap_max", f"must be >= 1, got {cfg.gap_max}")
    _require(cfg.formats in FORMATS, "formats",
             f"must be one of {FORMATS}, got {cfg.formats!r}")
    _require(cfg.inject_fault in FAULT_NAMES, "inject_fault",
             f"must be one of {FAULT_NAMES}, got {cfg.inject_fault!r}")
    gs = cfg.grid_size
    _require(gs >= 4 and not (gs & (gs - 1)), "grid_size",
             f"must be a power of two >= 4, got {gs}")
    _require(cfg.basis_mode in ("subset", "enumerate"), "basis_mode",
             f"must be subset or enumerate, got {cfg.basis_mode!r}")

    # classical normalization: only tau is moved; band boundary flags recorded
    normalization: dict = {}
    if cfg.tau >= 1.0:
        normalization["tau"] = {"given": cfg.tau, "used": 0.5}
        cfg.tau = 0.5
    if cfg.a > 1.0:
        normalization["a_above_one"] = cfg.a
    if cfg.b < 1.0:
        normalization["b_below_one"] = cfg.b
    cfg.normalization = normalization

    band = cfg.band()
    for idx, raw in enumerate(cfg.targets):
        arr = np.asarray(raw, dtype=float)
        _require(arr.shape == (cfg.m, cfg.m), f"targets[{idx}]",
                 f"expected shape ({cfg.m}, {cfg.m}), got {arr.shape}")
        g = check_symmetric(arr)
        if not in_band(g, band):
            lo, hi = eta_bounds(g)
            raise ValidationError(
                f"targets[{idx}]: eigenvalues [{lo:.12g}, {hi:.12g}] fall "
                f"outside the band [{cfg.a:g}, {cfg.b:g}]"
            )
    return cfg
