"""Shared fixtures: canonical small runs reused across test modules."""

import numpy as np
import pytest

from covwobble import (
    Band,
    CoefficientScheme,
    ConstructionConfig,
    GridSpec,
    run_recursion,
)

TARGET_B = np.array([[1.5, 0.3], [0.3, 1.2]])


@pytest.fixture(scope="session")
def identity_run():
    """Single-target identity construction at full depth 8.

    This is the canonical feasible configuration: after the first level the
    targets repeat, so every later level leaves the functions unchanged and
    the block lengths stay small.
    """
    cfg = ConstructionConfig(
        band=Band(2, 1.0, 2.0),
        targets=(np.eye(2),),
        depth=8,
        delta=5.0,
        scheme=CoefficientScheme("fejer", 2 ** 17),
        grid=GridSpec(2 ** 18),
        fejer_scan_cap=2 ** 16,
    )
    result = run_recursion(cfg)
    assert result.ok, result.abort_reason
    return result


@pytest.fixture(scope="session")
def quick_run():
    """Smaller depth-4 run for sampling and dependence tests."""
    cfg = ConstructionConfig(
        band=Band(2, 1.0, 2.0),
        targets=(np.eye(2),),
        depth=4,
        delta=5.0,
        scheme=CoefficientScheme("fejer", 2 ** 15),
        grid=GridSpec(2 ** 16),
        fejer_scan_cap=2 ** 14,
    )
    result = run_recursion(cfg)
    assert result.ok, result.abort_reason
    return result
