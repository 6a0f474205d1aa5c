"""Window dependence estimates: canonical correlations, mutual information,
composition inequalities, and decay."""

import numpy as np
import pytest

from covwobble import (
    WindowSpec,
    canonical_corrs,
    composition_checks,
    decay_scan,
    mi_hat,
    process_autocov,
    process_spec,
    rho_hat,
)
from covwobble.dependence import (
    block_decay_scan,
    block_table_list,
    mi_hat_vector,
    rho_hat_vector,
    scalar_window_cov,
    stacked_pair_mi,
    vector_window_cov,
)
from covwobble.errors import (
    ConfigurationError,
    DegenerateWindowError,
    TableTooShortError,
)

WHITE = np.array([1.0, 0.0, 0.0, 0.0])


def ar1_autocov(rho, kmax):
    return rho ** np.arange(kmax + 1)


class TestWindowCov:
    def test_white_noise_cross_block_vanishes(self):
        a, b, c = scalar_window_cov(WHITE, WindowSpec(2, 1, 2))
        np.testing.assert_array_equal(c, np.zeros((2, 2)))
        np.testing.assert_array_equal(a, np.eye(2))
        np.testing.assert_array_equal(b, np.eye(2))

    def test_single_lag_window(self):
        r = np.array([1.3, 0.4, 0.1])
        a, b, c = scalar_window_cov(r, WindowSpec(1, 1, 1))
        assert a[0, 0] == 1.3 and b[0, 0] == 1.3 and c[0, 0] == 0.4

    def test_cross_lags_ordered(self):
        r = np.arange(10.0, 0.0, -1.0) / 10.0
        a, b, c = scalar_window_cov(r, WindowSpec(3, 2, 2))
        # past (X_-2, X_-1, X_0) against future (X_2, X_3)
        expect = np.array([[r[4], r[5]], [r[3], r[4]], [r[2], r[3]]])
        np.testing.assert_array_equal(c, expect)

    def test_table_too_short(self):
        with pytest.raises(TableTooShortError):
            scalar_window_cov(WHITE, WindowSpec(4, 4, 4))

    def test_window_validation(self):
        with pytest.raises(ConfigurationError):
            WindowSpec(0, 1, 1)


class TestCanonicalCorrelations:
    def test_zero_cross_block(self):
        corrs = canonical_corrs(np.eye(3), np.eye(3), np.zeros((3, 3)))
        np.testing.assert_array_equal(corrs.r, np.zeros(3))
        assert not corrs.clipped

    def test_single_lag_closed_form(self):
        r0, r1 = 1.3, 0.4
        corrs = canonical_corrs([[r0]], [[r0]], [[r1]])
        assert corrs.r[0] == pytest.approx(r1 / r0, rel=1e-12)

    def test_identical_windows_clip_and_flag(self):
        a = np.array([[1.0, 0.3], [0.3, 1.0]])
        corrs = canonical_corrs(a, a, a)
        assert corrs.clipped
        assert corrs.r[0] == pytest.approx(1.0, abs=1e-9)
        assert corrs.r[0] < 1.0

    def test_degenerate_block_rejected(self):
        with pytest.raises(DegenerateWindowError):
            canonical_corrs(np.zeros((2, 2)), np.eye(2), np.zeros((2, 2)))

    def test_descending_and_in_range(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            joint = rng.standard_normal((8, 8))
            joint = joint @ joint.T + 8 * np.eye(8)
            a, b, c = joint[:4, :4], joint[4:, 4:], joint[:4, 4:]
            corrs = canonical_corrs(a, b, c)
            assert np.all(np.diff(corrs.r) <= 1e-12)
            assert np.all((corrs.r >= 0.0) & (corrs.r < 1.0))


class TestRhoMi:
    def test_white_noise(self):
        w = WindowSpec(2, 1, 2)
        assert rho_hat(WHITE, w) == 0.0
        assert mi_hat(WHITE, w) == 0.0

    def test_single_correlation_formula(self):
        r = np.array([1.0, 0.5, 0.0, 0.0])
        w = WindowSpec(1, 1, 1)
        assert mi_hat(r, w) == pytest.approx(-0.5 * np.log(0.75), rel=1e-12)

    def test_rho_below_sqrt_two_mi(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            joint = rng.standard_normal((6, 6))
            joint = joint @ joint.T + 6 * np.eye(6)
            corrs = canonical_corrs(joint[:3, :3], joint[3:, 3:], joint[:3, 3:])
            rho = corrs.r[0]
            mi = float(-0.5 * np.sum(np.log1p(-corrs.r ** 2)))
            assert rho <= np.sqrt(2.0 * mi) + 1e-9

    def test_window_monotonicity(self):
        r = ar1_autocov(0.6, 40)
        values_rho = []
        values_mi = []
        for p in (1, 2, 4, 8, 16):
            w = WindowSpec(p, 1, p)
            values_rho.append(rho_hat(r, w))
            values_mi.append(mi_hat(r, w))
        assert all(b >= a - 1e-12 for a, b in zip(values_rho, values_rho[1:]))
        assert all(b >= a - 1e-12 for a, b in zip(values_mi, values_mi[1:]))

    def test_gap_decay_ar1(self):
        r = ar1_autocov(0.6, 80)
        w = lambda g: WindowSpec(8, g, 8)
        vals = [rho_hat(r, w(g)) for g in (1, 2, 4, 8, 16)]
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


class TestProcessLevel:
    def test_process_autocov_lag_zero_matches_weighted_sum(self, quick_run):
        spec = process_spec(quick_run)
        rmats = process_autocov(spec, 4)
        expect = np.zeros((2, 2))
        basis = quick_run.basis
        for ell in range(basis.L):
            expect += spec.tables[("q1", ell)].r[0] * basis.q1[ell]
        for u in range(2):
            expect += spec.tables[("q2", u)].r[0] * basis.q2[u]
        expect += spec.tables[("q3", 0, 1)].r[0] * basis.q3[0]
        np.testing.assert_allclose(rmats[0], expect, atol=1e-12)

    def test_vector_window_blocks_symmetric(self, quick_run):
        spec = process_spec(quick_run)
        rmats = process_autocov(spec, 8)
        a, b, c = vector_window_cov(rmats, WindowSpec(3, 2, 3))
        np.testing.assert_allclose(a, a.T, atol=1e-14)
        np.testing.assert_allclose(b, b.T, atol=1e-14)
        assert a.shape == (6, 6) and c.shape == (6, 6)

    def test_block_bound_from_density_ratio(self, quick_run):
        # every block density lives between the band exponentials, which
        # caps the maximal correlation away from one
        constants = quick_run.constants
        bound = 1.0 - np.exp(constants.upsilon1 - constants.upsilon2)
        spec = process_spec(quick_run)
        for label, table, _ in block_table_list(spec):
            for wsize in (8, 16, 32, 64):
                need = 1 + 2 * wsize
                r = np.zeros(need + 1)
                upto = min(need + 1, len(table.r))
                r[:upto] = table.r[:upto]
                rho = rho_hat(r, WindowSpec(wsize, 1, wsize))
                assert rho <= bound + 1e-9, (label, wsize)

    def test_mi_additivity_over_independent_blocks(self, quick_run):
        spec = process_spec(quick_run)
        w = WindowSpec(8, 1, 8)
        blocks = block_table_list(spec)
        need = 1 + 16
        def pad(t):
            r = np.zeros(need + 1)
            upto = min(need + 1, len(t.r))
            r[:upto] = t.r[:upto]
            return r
        ra, rb = pad(blocks[0][1]), pad(blocks[1][1])
        stacked = stacked_pair_mi(ra, rb, w)
        assert stacked == pytest.approx(mi_hat(ra, w) + mi_hat(rb, w),
                                        abs=1e-10)

    def test_white_noise_blocks_additivity_trivial(self):
        w = WindowSpec(2, 1, 2)
        assert stacked_pair_mi(WHITE, WHITE, w) == pytest.approx(0.0, abs=1e-12)

    def test_composition_inequalities(self, quick_run):
        spec = process_spec(quick_run)
        report = composition_checks(spec, WindowSpec(16, 1, 16))
        assert report.rho_ok
        assert report.mi_ok
        assert report.additivity_ok
        assert report.rho_process <= report.rho_blocks_max + 1e-9
        assert report.mi_process <= report.mi_blocks_sum + 1e-9

    def test_decay_scan_monotone_and_small(self, quick_run):
        spec = process_spec(quick_run)
        scan = decay_scan(spec, 16, 16, [1, 2, 4, 8, 16, 32, 64, 128, 256])
        for seq in (scan["rho"], scan["mi"]):
            assert all(b <= a + 1e-9 for a, b in zip(seq, seq[1:]))
        assert scan["rho"][-1] < 1e-3
        assert scan["mi"][-1] < 1e-3
        assert "lower bound" in scan["caveat"]

    def test_block_decay_scan(self, quick_run):
        spec = process_spec(quick_run)
        table = block_table_list(spec)[0][1]
        scan = block_decay_scan(table, 16, 16, [1, 8, 64, 256])
        assert scan["rho"][-1] < 1e-3

    def test_block_cov_equals_weighted_autocov_sum(self, quick_run):
        # independent route to the exact block-sum covariance: the
        # triangular-weighted sum of the process matrix autocovariances
        from covwobble import exact_block_cov

        spec = process_spec(quick_run)
        n = 2
        length = quick_run.lengths[n - 1]
        rmats = process_autocov(spec, length - 1)
        weights = 1.0 - np.arange(length) / length
        total = rmats[0].copy()
        for k in range(1, length):
            total += 2.0 * weights[k] * rmats[k]
        np.testing.assert_allclose(total, exact_block_cov(quick_run, n),
                                   atol=1e-10)

    def test_vector_rho_in_range(self, quick_run):
        spec = process_spec(quick_run)
        rmats = process_autocov(spec, 40)
        w = WindowSpec(8, 1, 8)
        rho = rho_hat_vector(rmats, w)
        mi = mi_hat_vector(rmats, w)
        assert 0.0 <= rho < 1.0
        assert rho <= np.sqrt(2.0 * mi) + 1e-9
