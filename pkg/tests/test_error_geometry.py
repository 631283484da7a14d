import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pronylab import core
from pronylab import error_geometry as eg
from pronylab.exceptions import DegenerateCluster

PAIR = core.SpikeSignal([1.0, 1.0], [-0.1, 0.1])


class TestModelSpace:
    @pytest.mark.parametrize("x, h, kappa", [([-0.1, 0.1], 0.1, 0.0), ([0.9, 1.1], 0.1, 1.0), ([0.0, 0.0], 0.0, 0.0)])
    def test_geometry(self, x, h, kappa):
        g = eg.cluster_geometry(core.SpikeSignal([1, 1], x))
        assert g.h == pytest.approx(h) and g.kappa == pytest.approx(kappa)
        assert g.degenerate is (h == 0)

    def test_normalize(self):
        g, _ = eg.normalize(core.SpikeSignal([1, 1], [0.9, 1.1]))
        np.testing.assert_allclose(g.nodes, [-1, 1])
        g, _ = eg.normalize(core.SpikeSignal([1, 2, 3], [-0.1, 0, 0.1]))
        np.testing.assert_allclose(g.nodes, [-1, 0, 1])
        with pytest.raises(DegenerateCluster):
            eg.normalize(core.SpikeSignal([1, 1], [0.3, 0.3]))

    def test_denormalize_inverts(self):
        f = core.SpikeSignal([1, -2, 0.5], [0.2, 0.35, 0.4])
        g, geom = eg.normalize(f)
        back = eg.denormalize(g, geom)
        assert back.distance(f) <= 1e-15

    def test_model_moments(self):
        np.testing.assert_allclose(eg.model_moments(core.SpikeSignal([1, 1], [0.9, 1.1]), 4), [2, 0, 2, 0], atol=1e-12)
        with pytest.raises(DegenerateCluster):
            eg.model_moments(core.SpikeSignal([2.0], [5.0]), 2)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(-10, 10), st.floats(0.01, 100))
    def test_model_moments_invariant_under_affine_maps(self, shift, scale):
        f = core.SpikeSignal([1, -2, 0.5], [0.2, 0.35, 0.4])
        g = core.SpikeSignal(f.amplitudes, shift + scale * f.nodes)
        np.testing.assert_allclose(eg.model_moments(f, 6), eg.model_moments(g, 6), rtol=1e-8, atol=1e-8)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(-5, 5), st.floats(0.01, 1))
    def test_binomial_transform_matches_direct_moments(self, kappa, h):
        f = core.SpikeSignal([1, 2], [kappa - h, kappa + 0.3 * h])
        geom = eg.ClusterGeometry(h=h, kappa=kappa)
        T = eg.moment_transform(geom, 4)
        Ti = eg.inverse_moment_transform(geom, 4)
        m = core.moments(f, 4)
        # the transform cancels terms of size |T| |m|
        bound = 64 * core.EPS * (np.abs(T) @ np.abs(m)) + 1e-14
        assert np.all(np.abs(T @ m - eg.model_moments(f, 4, geom)) <= bound)
        np.testing.assert_allclose(Ti @ T, np.eye(4), atol=1e-8)


class TestPi:
    def test_membership(self):
        g = core.SpikeSignal([1, 1], [-1, 1])
        assert eg.pi_membership(g, g, 1e-3, 10.0)
        shifted = core.SpikeSignal([1.001, 1.001], [-1, 1])  # m_0 off by 2e-3
        assert not eg.pi_membership(shifted, g, 1e-3, 10.0)

    def test_boundary_is_closed(self):
        g = core.SpikeSignal([1.0], [0.0])
        gp = core.SpikeSignal([1.5], [0.0])  # m_0 off by exactly 0.5, m_1 = 0
        assert eg.pi_membership(gp, g, 0.5, 3.0)

    def test_moment_distance(self):
        g = core.SpikeSignal([1, 1], [-1, 1])
        assert eg.moment_distance(g, g) == 0.0
        assert eg.moment_distance(g, core.SpikeSignal([1, 1], [-1, 1.5])) == pytest.approx(2.375)


class TestRegularity:
    def test_random_regular_signals_are_regular(self, rng):
        p = eg.RegularityParams(0.2, 0.5, 2.0)
        for d in (1, 2, 4, 6):
            for _ in range(20):
                s = eg.random_regular_signal(d, p, rng, signs=True)
                assert p.is_regular(s)

    def test_infeasible_eta(self):
        with pytest.raises(ValueError):
            eg.RegularityParams(0.8, 0.5, 2.0).validate(4)


class TestSampling:
    def test_corner_coverage(self):
        u = eg.unit_perturbations(4, 100, 0)
        corners = {tuple(r) for r in u[:16]}
        assert len(corners) == 16 and np.all(np.abs(u) <= 1)

    def test_deterministic(self):
        a = eg.sample_error_set(PAIR, 1e-3, 3000, seed=7)
        b = eg.sample_error_set(PAIR, 1e-3, 3000, seed=7)
        np.testing.assert_array_equal(a.nodes, b.nodes)
        c = eg.sample_error_set(PAIR, 1e-3, 3000, seed=8)
        assert not np.array_equal(a.nodes, c.nodes)

    def test_samples_lie_in_error_set(self):
        s = eg.sample_error_set(PAIR, 1e-3, 2000, seed=0)
        assert s.n == 2000 and s.discard_fraction == 0
        for f in s.signals[:200]:
            assert np.max(np.abs(core.moments(f, 4) - core.moments(PAIR, 4))) <= 1e-3 * (1 + 1e-6)

    def test_empty(self):
        s = eg.sample_error_set(PAIR, 1e-3, 0)
        assert s.n == 0 and list(s) == []

    def test_small_eps_collapses_to_signal(self):
        s = eg.sample_error_set(PAIR, 1e-14, 100)
        assert np.max(np.abs(s.nodes - PAIR.nodes)) < 1e-9

    def test_thread_count_does_not_change_output(self, monkeypatch):
        a = eg.sample_error_set(PAIR, 1e-3, 5000, seed=3)
        monkeypatch.setenv("PRONYLAB_THREADS", "4")
        b = eg.sample_error_set(PAIR, 1e-3, 5000, seed=3)
        np.testing.assert_array_equal(a.nodes, b.nodes)


class TestSandwich:
    @pytest.mark.parametrize("kappa", [0.0, 1.0, 5.0])
    @pytest.mark.parametrize("eps", [1e-3, 1.0])
    def test_no_violations(self, kappa, eps):
        f = eg.regular_cluster(2, 0.1, kappa)
        s = eg.sample_error_set(f, eps, 2000, seed=1)
        res = eg.sandwich_check(f, eps, s, n_probes=500)
        assert res.outer_violations == 0 and res.inner_violations == 0
        if kappa == 0:
            assert res.kappa_zero_mismatches == 0


class TestWorstCase:
    def test_single_spike_closed_form(self):
        eps = 1e-6
        rep = eg.worst_case_errors(core.SpikeSignal([1.0], [0.0]), eps, 64, seed=0)
        # x = m1/m0 and a = m0 on the eps-square
        assert rep.rho_A == pytest.approx(eps, rel=1e-6)
        assert rep.rho_X == pytest.approx(eps / (1 - eps), rel=1e-6)

    def test_eps_to_zero(self):
        rep = eg.worst_case_errors(PAIR, 1e-12, 64)
        assert rep.rho < 1e-8

    def test_pair_orders(self):
        h = 0.1
        rep = eg.worst_case_errors(PAIR, h**3, 1000)
        assert 0.1 < rep.rho_X / (h**3 * h**-2) < 10
        assert 0.1 < rep.rho_A / (h**3 * h**-3) < 10
        assert rep.rho == max(rep.rho_A, rep.rho_X)
        assert rep.sandwich_outer_violations == 0

    def test_refinement_never_lowers(self):
        a = eg.worst_case_errors(PAIR, 1e-3, 300, refine=False, sandwich=False)
        b = eg.worst_case_errors(PAIR, 1e-3, 300, refine=True, sandwich=False)
        assert b.rho >= a.rho and b.rho_X >= a.rho_X


class TestDeltaQ:
    def test_full_q_is_point_error(self):
        s = eg.sample_error_set(PAIR, 1e-3, 500)
        dist = eg.delta_q_concentration(PAIR, 1e-3, s, 3)
        xbar = s.nodes / 0.1
        expected = np.max(np.maximum(np.max(np.abs(s.amplitudes - 1), axis=1), np.max(np.abs(xbar - [-1, 1]), axis=1)))
        assert dist == pytest.approx(expected)

    def test_curve_distance_below_point_distance(self):
        s = eg.sample_error_set(PAIR, 1e-3, 500)
        assert eg.delta_q_concentration(PAIR, 1e-3, s, 2) < eg.delta_q_concentration(PAIR, 1e-3, s, 3)

    def test_sample_at_g_has_zero_distance(self):
        s = eg.sample_error_set(PAIR, 1e-15, 4)
        assert eg.delta_q_concentration(PAIR, 1e-3, s, 2) < 1e-9

    def test_q_range(self):
        s = eg.sample_error_set(PAIR, 1e-3, 10)
        with pytest.raises(ValueError):
            eg.delta_q_concentration(PAIR, 1e-3, s, 1)


class TestScaling:
    def test_d1_slopes_vanish(self):
        r = eg.scaling_experiment(1, [0.1, 0.07, 0.05, 0.035], 3, n=64)
        assert abs(r.slope_X) < 0.05 and abs(r.slope_A) < 0.05

    def test_validation(self):
        with pytest.raises(ValueError):
            eg.scaling_experiment(2, [0.1, 0.2, 0.05, 0.01], 3)
        with pytest.raises(ValueError):
            eg.scaling_experiment(2, [0.1, 0.07, 0.05, 0.03], 2)

    def test_fit_slope(self):
        h = np.array([0.1, 0.05, 0.025])
        assert eg.fit_slope(h, h**3, h) == pytest.approx(2.0)


def test_bilipschitz_ratio_band_is_stable():
    g = core.SpikeSignal([1.0, 1.5, 0.8], [-1.0, 0.1, 1.0])
    big = eg.bilipschitz_ratios(g, 1e-4, 400, seed=0)
    small = eg.bilipschitz_ratios(g, 1e-5, 400, seed=0)
    assert big.size > 300 and small.size > 300
    assert 0.5 < np.median(small) / np.median(big) < 2
    assert 0.5 < small.max() / big.max() < 2
