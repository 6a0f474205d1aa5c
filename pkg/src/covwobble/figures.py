"""Figure rendering for the report path.

Every plot is written next to the delimited output; rendering is headless
(Agg) and each function returns the written path or None when the report
lacks the corresponding section.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_coefficient_gaps(report: dict, out_dir: Path) -> Path | None:
    levels = [lv for lv in report.get("levels", []) if "coeff_gap" in lv]
    if not levels:
        return None
    n = [lv["n"] for lv in levels]
    gap = [max(lv["coeff_gap"], 1e-18) for lv in levels]
    bound = [lv["coeff_bound_padded"] for lv in levels]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(n, gap, "o-", label="max starred-weight gap")
    ax.semilogy(n, bound, "k--", label="bound")
    ax.set_xlabel("level n")
    ax.set_ylabel("max |starred - plain| weight")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    path = out_dir / "coefficient_gaps.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_wobble(report: dict, out_dir: Path) -> Path | None:
    levels = [lv for lv in report.get("levels", []) if "entry_gap" in lv]
    if not levels:
        return None
    n = [lv["n"] for lv in levels]
    gap = [max(lv["entry_gap"], 1e-18) for lv in levels]
    bound = [lv["entry_bound"] for lv in levels]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(n, gap, "o-", label="max entry |block cov - target|")
    ax.semilogy(n, bound, "k--", label="bound")
    ax.set_xlabel("level n")
    ax.set_ylabel("entrywise gap")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    path = out_dir / "wobble_gaps.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_mixing_decay(report: dict, out_dir: Path) -> Path | None:
    scan = report.get("mixing", {}).get("process_decay")
    if not scan:
        return None
    gaps = scan["gaps"]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(gaps, np.maximum(scan["rho"], 1e-20), "o-", label="rho (window)")
    ax.loglog(gaps, np.maximum(scan["mi"], 1e-20), "s-", label="mutual info (window)")
    ax.set_xlabel("gap")
    ax.set_ylabel("window estimate (lower bound)")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    path = out_dir / "mixing_decay.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_covariance_compare(report: dict, out_dir: Path) -> Path | None:
    sim = report.get("simulation", {})
    if not sim.get("empirical"):
        return None
    emp = np.asarray(sim["empirical"])
    exact = np.asarray(sim["exact"])
    fig, axes = plt.subplots(1, 3, figsize=(10, 3.2))
    vmax = float(np.max(np.abs(exact)))
    for ax, mat, title in (
        (axes[0], exact, "exact"),
        (axes[1], emp, "empirical"),
        (axes[2], emp - exact, "difference"),
    ):
        scale = vmax if title != "difference" else max(np.max(np.abs(mat)), 1e-18)
        im = ax.imshow(mat, cmap="RdBu_r", vmin=-scale, vmax=scale)
        ax.set_title(title)
        fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    path = out_dir / "covariance_compare.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_all(report: dict, out_dir: Path) -> list:
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [
        plot_coefficient_gaps(report, out_dir),
        plot_wobble(report, out_dir),
        plot_mixing_decay(report, out_dir),
        plot_covariance_compare(report, out_dir),
    ]
    return [p for p in paths if p is not None]
