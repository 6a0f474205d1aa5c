"""Machine-readable reports: one JSON document plus flat CSV tables.

The JSON document always echoes the full configuration so any report can be
reproduced; the only non-reproducible field is the timestamp under ``meta``.
Every check entry carries its measured value, bound, tolerance provenance
(exact / quadrature / monte-carlo), and verdict.
"""

from __future__ import annotations

import csv
import datetime
import json
from pathlib import Path

import numpy as np

from .config import SCHEMA_VERSION, RunConfig


def jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, int, float, str)) or obj is None:
        return obj
    return str(obj)


def check_entry(name: str, passed: bool, value=None, bound=None,
                provenance: str = "exact", detail: str = "") -> dict:
    return {
        "name": name,
        "passed": bool(passed),
        "value": jsonable(value),
        "bound": jsonable(bound),
        "provenance": provenance,
        "detail": detail,
    }


def new_report(cfg: RunConfig) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "config": jsonable(cfg.echo()),
        "constants": {},
        "levels": [],
        "simulation": {},
        "mixing": {},
        "checks": [],
        "meta": {"created_utc": datetime.datetime.now(
            datetime.timezone.utc).isoformat()},
    }


def all_checks_pass(report: dict) -> bool:
    return all(entry["passed"] for entry in report["checks"])


def write_json(report: dict, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "report.json"
    path.write_text(json.dumps(jsonable(report), indent=2, sort_keys=True) + "\n")
    return path


def write_csv(path: Path, header: list, rows: list) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])
    return path


def write_level_tables(report: dict, out_dir: Path) -> list:
    written = []
    levels = report.get("levels", [])
    if levels:
        rows = []
        for lv in levels:
            rows.append([lv["n"], lv["length"],
                         lv.get("coeff_gap", ""), lv.get("coeff_bound_padded", ""),
                         lv.get("entry_gap", ""), lv.get("entry_bound", ""),
                         lv.get("eigen_ratio", "")])
        written.append(write_csv(
            out_dir / "levels.csv",
            ["level", "block_length", "max_coeff_gap", "coeff_bound",
             "max_entry_gap", "entry_bound", "eigen_ratio"],
            rows,
        ))
    coeffs = report.get("coefficients", [])
    if coeffs:
        rows = [
            [c["level"], c["key"], c["weight"], c["starred"], c["gap"]]
            for c in coeffs
        ]
        written.append(write_csv(
            out_dir / "coefficients.csv",
            ["level", "key", "weight", "starred", "gap"],
            rows,
        ))
    return written


def write_simulation_table(report: dict, out_dir: Path) -> list:
    sim = report.get("simulation", {})
    if not sim.get("empirical"):
        return []
    emp = np.asarray(sim["empirical"])
    exact = np.asarray(sim["exact"])
    se = np.asarray(sim["standard_error"])
    m = emp.shape[0]
    rows = [
        [i, j, float(exact[i, j]), float(emp[i, j]), float(se[i, j]),
         float(abs(emp[i, j] - exact[i, j]) / se[i, j])]
        for i in range(m) for j in range(m)
    ]
    return [write_csv(
        out_dir / "simulation.csv",
        ["i", "j", "exact", "empirical", "standard_error", "deviation_in_se"],
        rows,
    )]


def write_mixing_tables(report: dict, out_dir: Path) -> list:
    mix = report.get("mixing", {})
    written = []
    scan = mix.get("process_decay")
    if scan:
        rows = list(zip(scan["gaps"], scan["rho"], scan["mi"]))
        written.append(write_csv(
            out_dir / "mixing_decay.csv", ["gap", "rho", "mi"], rows
        ))
    blocks = mix.get("block_bounds")
    if blocks:
        rows = [
            [b["block"], b["window"], b["rho"], b["bound"], b["mi"]]
            for b in blocks
        ]
        written.append(write_csv(
            out_dir / "mixing_blocks.csv",
            ["block", "window", "rho", "bound", "mi"],
            rows,
        ))
    return written


def write_checks_table(report: dict, out_dir: Path) -> Path:
    rows = [
        [c["name"], "pass" if c["passed"] else "FAIL", c["value"], c["bound"],
         c["provenance"], c["detail"]]
        for c in report["checks"]
    ]
    return write_csv(
        out_dir / "checks.csv",
        ["check", "verdict", "value", "bound", "provenance", "detail"],
        rows,
    )
