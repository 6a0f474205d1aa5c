"""Perturbation engine: bump schemes, width search, and verified bumps."""

import math

import numpy as np
import pytest

from covwobble import (
    CoefficientScheme,
    CosineSeries,
    GridSpec,
    PerturbRequest,
    build_gc,
    cap_M,
    coeff_a,
    construct_h,
    fejer_gc,
    harmonic_gc,
    psi,
    select_c0,
    verify_conclusions,
)
from covwobble.errors import (
    ConfigurationError,
    ConstructionFailedError,
    InfeasibleRequestError,
    SchemeInfeasibleError,
)
from covwobble.perturb import CapOverflow, envelope_report
from covwobble.spectral import ZERO_SERIES, evaluate

GRID = GridSpec(2 ** 14)


def request(f=ZERO_SERIES, ups1=-2.0, ups2=math.log(2.0), theta=0.3,
            delta=0.5, eps=0.05, cap=8):
    return PerturbRequest(f, ups1, ups2, theta, delta, eps, cap)


class TestSelectC0:
    def test_flat_function_closed_form(self):
        # constraints reduce to min(1, theta, band margins) for constant f
        c0 = select_c0(request(theta=0.3), GRID)
        assert c0 == pytest.approx(0.9 * 0.3, abs=1e-6)

    def test_near_degenerate_budget(self):
        c0 = select_c0(request(theta=1e-9), GRID)
        assert 0.0 < c0 <= 0.9e-9 * 1.0000001

    def test_band_violation_rejected(self):
        bad = request(f=CosineSeries(0.6, [0.2]))  # exceeds log 2 at 0
        with pytest.raises(InfeasibleRequestError):
            select_c0(bad, GRID)

    def test_oscillation_constraint_shrinks_width(self):
        # a steep function forces the width below the other caps
        f = CosineSeries(0.0, [-0.3])
        req = request(f=f, theta=0.35, ups2=0.5)
        c0 = select_c0(req, GRID)
        assert c0 < 0.9 * min(1.0, 0.35 - f.value_at_zero())
        lam = GRID.nodes()
        vals = evaluate(f, lam)
        mask = np.abs(lam) <= c0 / 0.9
        assert np.max(np.abs(vals[mask] - f.value_at_zero())) < 0.5 - 0.35


class TestLoglogCoefficients:
    def test_first_values(self):
        assert coeff_a(0.1, 1) == pytest.approx(0.01 / math.pi)
        assert coeff_a(0.1, 2) == pytest.approx(0.005 / math.pi)

    def test_strictly_decreasing(self):
        c = 0.5
        k = np.arange(1, 10 ** 6, 997)
        vals = [coeff_a(c, int(i)) for i in k]
        assert all(x > y for x, y in zip(vals, vals[1:]))

    def test_cap_at_boundary(self):
        # budget barely above the first coefficient: the second overshoots
        assert cap_M(0.5, 0.1, 10 ** 6) == 1

    def test_cap_matches_direct_accumulation(self):
        c, budget = 0.3, 0.12
        m = cap_M(c, budget, 10 ** 6)
        direct = 0.0
        k = 0
        while True:
            k += 1
            nxt = direct + coeff_a(c, k)
            if nxt > budget:
                break
            direct = nxt
        assert m == k - 1

    def test_cap_overflow_estimate(self):
        res = cap_M(0.1, 0.5, 10 ** 7)
        assert isinstance(res, CapOverflow)
        assert res.loglog_estimate == pytest.approx(
            math.pi * 0.5 / 0.01 - (1.5 - math.log(math.log(3.0))), rel=1e-12
        )
        assert res.estimate == math.inf

    def test_budget_below_first_coefficient(self):
        with pytest.raises(InfeasibleRequestError):
            cap_M(0.5, 0.05, 100)


class TestBuildGc:
    def test_single_term(self):
        g = build_gc(0.1, 1)
        assert g.degree == 1
        assert g.coeffs[0] == pytest.approx(0.01 / math.pi)

    def test_value_at_zero_is_coefficient_sum(self):
        g = build_gc(0.3, 57)
        assert g.value_at_zero() == pytest.approx(float(np.sum(g.coeffs)))

    def test_envelopes(self):
        c, budget = 0.5, 0.1
        m = cap_M(c, budget, 10 ** 6)
        g = build_gc(c, m)
        rep = envelope_report(g, c, GRID)
        assert rep["outer_ok"] and rep["inner_ok"]
        assert rep["g_at_zero"] <= budget


class TestHarmonicGc:
    def test_smallest_fitting_length(self):
        # smallest M with budget^2 / H_M <= 0.9 * delta_room
        g = harmonic_gc(0.5, 0.1, 10 ** 6)
        assert g.degree == 9
        h9 = float(np.sum(1.0 / np.arange(1.0, 10.0)))
        assert psi(g) == pytest.approx(0.25 / h9, rel=1e-12)
        assert psi(g) <= 0.09

    def test_hits_budget_at_zero(self):
        for budget in (0.05, 0.8, 2.0):
            g = harmonic_gc(budget, 1.0, 10 ** 6)
            assert g.value_at_zero() == pytest.approx(budget, abs=1e-12)

    def test_infeasible_length(self):
        with pytest.raises(SchemeInfeasibleError):
            harmonic_gc(1.0, 0.001, 10 ** 7)


class TestFejerGc:
    def test_nonnegative_bump_hitting_budget(self):
        g = fejer_gc(1.7, 64)
        assert g.value_at_zero() == pytest.approx(1.7, abs=1e-15)
        vals = evaluate(g, GRID.nodes()[::16])
        assert np.min(vals) >= -1e-12
        assert np.max(vals) <= 1.7 + 1e-12

    def test_psi_closed_form(self):
        for budget, m in ((0.5, 16), (2.0, 301)):
            g = fejer_gc(budget, m)
            expect = budget ** 2 / 3.0 * (1.0 - 1.0 / m ** 2)
            assert psi(g) == pytest.approx(expect, rel=1e-12)

    def test_l1_norm_closed_form(self):
        g = fejer_gc(0.9, 128)
        lam = GRID.nodes()
        l1 = float(np.mean(np.abs(evaluate(g, lam)))) * 2.0 * math.pi
        assert l1 == pytest.approx(2.0 * math.pi * 0.9 / 128, rel=1e-10)

    def test_rejects_tiny_order(self):
        with pytest.raises(ConfigurationError):
            fejer_gc(1.0, 1)


class TestConstructH:
    def test_exact_match_returns_input(self):
        f = CosineSeries(-0.25, [0.05])
        req = request(f=f, theta=f.value_at_zero())
        res = construct_h(req, CoefficientScheme("fejer"), GRID)
        assert res.branch == "identity"
        assert res.h is f
        assert res.all_passed()

    def test_raise_branch_fejer(self):
        req = request(theta=0.3, delta=0.5, eps=0.05, cap=8)
        res = construct_h(req, CoefficientScheme("fejer"), GRID)
        assert res.branch == "raise"
        assert res.all_passed()
        assert res.h.value_at_zero() == pytest.approx(0.3, abs=1e-14)
        for rec in res.checks.values():
            assert rec.slack > 0.0

    def test_raise_branch_harmonic_small_budget(self):
        req = request(theta=0.04, delta=0.5, eps=0.2, cap=4)
        res = construct_h(req, CoefficientScheme("harmonic", 10 ** 6), GRID)
        assert res.branch == "raise"
        assert res.all_passed()

    def test_loglog_scheme_near_unit_budget(self):
        # the loglog coefficients reach their budget within a representable
        # series only when the bump width can sit near 1, i.e. for budgets
        # just below 1; tolerances must then absorb the wide bump
        req = request(theta=0.98, ups1=-2.0, ups2=2.0, delta=0.5, eps=4.0,
                      cap=2)
        res = construct_h(req, CoefficientScheme("loglog", 10 ** 6),
                          GridSpec(2 ** 21))
        assert res.all_passed()
        assert res.branch == "raise"
        assert res.attempts >= 1  # halvings before success are recorded
        assert 0.0 < res.c_used <= 0.9
        assert abs(res.h.value_at_zero() - 0.98) <= res.c_used ** 2 / math.pi

    def test_negation_round_trip_is_exact(self):
        req = request(theta=-0.4, eps=0.05, delta=0.5, cap=8)
        res = construct_h(req, CoefficientScheme("fejer"), GRID)
        assert res.branch == "negated"
        assert res.all_passed()
        mirrored = construct_h(req.negated(), CoefficientScheme("fejer"), GRID)
        assert mirrored.branch == "raise"
        assert res.h.a0 == -mirrored.h.a0
        assert np.array_equal(res.h.coeffs, -mirrored.h.coeffs)

    def test_records_reverify_from_h_alone(self):
        req = request(theta=0.3)
        res = construct_h(req, CoefficientScheme("fejer"), GRID)
        fresh = verify_conclusions(req.f, res.h, req, GRID)
        for name, rec in res.checks.items():
            assert fresh[name].passed
            assert fresh[name].value == pytest.approx(rec.value, abs=1e-13)

    def test_harmonic_big_budget_fails_l1(self):
        # the harmonic bump cannot be local enough: its L1 norm decays only
        # like 4.06 * budget / H_M
        req = request(theta=0.45, delta=30.0, eps=0.02, cap=4)
        with pytest.raises(ConstructionFailedError) as err:
            construct_h(req, CoefficientScheme("harmonic", 10 ** 5), GRID)
        assert "L1" in str(err.value) or "l1" in str(err.value)

    def test_loglog_scheme_overflow_redirects(self):
        req = request(theta=0.45, delta=0.5, eps=0.05, cap=8)
        with pytest.raises(SchemeInfeasibleError):
            construct_h(req, CoefficientScheme("loglog", 10 ** 5), GRID)

    def test_request_validation(self):
        with pytest.raises(InfeasibleRequestError):
            construct_h(request(theta=5.0), CoefficientScheme("fejer"), GRID)
        fat = CosineSeries(0.0, [1.2])  # psi = 1.44 >= delta
        with pytest.raises(InfeasibleRequestError):
            construct_h(request(f=fat, delta=1.0), CoefficientScheme("fejer"), GRID)

    def test_scheme_validation(self):
        with pytest.raises(ConfigurationError):
            CoefficientScheme("splines")


class TestConditionPreservation:
    def test_chained_bumps_stay_verified(self):
        # push the value at zero through a short schedule of targets and
        # re-verify every intermediate function
        scheme = CoefficientScheme("fejer")
        grid = GridSpec(2 ** 16)
        thetas = [-1.0, -0.2, -1.4, -0.6]
        f = ZERO_SERIES
        for level, theta in enumerate(thetas, start=1):
            req = request(f=f, theta=theta, ups1=-3.0, delta=4.0,
                          eps=2.0 ** -level, cap=2 ** (level + 2))
            res = construct_h(req, scheme, grid)
            assert res.all_passed()
            f = res.h
            assert f.value_at_zero() == pytest.approx(theta, abs=2.0 ** -level)
