import numpy as np
import pytest
from conftest import regular_corpus
from hypothesis import given, settings
from hypothesis import strategies as st
from oracle import series_expand_rational

from pronylab import core
from pronylab.exceptions import NearDegenerateVandermonde, SingularHankel


class TestTypes:
    def test_signal_sorts_pairs_by_node(self):
        s = core.SpikeSignal([1.0, 2.0, 3.0], [0.3, -0.1, 0.2])
        np.testing.assert_array_equal(s.nodes, [-0.1, 0.2, 0.3])
        np.testing.assert_array_equal(s.amplitudes, [2.0, 3.0, 1.0])
        assert s.d == 3

    @pytest.mark.parametrize(
        "a, x",
        [([1.0], [np.nan]), ([np.inf], [0.0]), ([1.0, 2.0], [0.0])],
    )
    def test_signal_rejects_bad_input(self, a, x):
        with pytest.raises(ValueError):
            core.SpikeSignal(a, x)

    def test_empty_signal_is_the_zero_measure(self):
        s = core.SpikeSignal([], [])
        assert s.d == 0
        np.testing.assert_array_equal(core.moments(s, 4), np.zeros(4))

    def test_signal_arrays_are_read_only(self, pair):
        with pytest.raises(ValueError):
            pair.nodes[0] = 3.0

    def test_moment_vector_needs_even_length(self):
        with pytest.raises(ValueError):
            core.MomentVector([1.0, 2.0, 3.0])
        assert core.MomentVector([1, 2, 3, 4]).d == 2

    def test_monic_polynomial(self):
        q = core.MonicPolynomial([-6.0, 11.0, -6.0])
        np.testing.assert_array_equal(q.coefficients, [-6, 11, -6, 1])
        assert q(1.0) == 0.0 and q(3.0) == 0.0
        np.testing.assert_allclose(q.elementary_symmetric(), [6, 11, 6])


class TestMaps:
    @pytest.mark.parametrize(
        "a, x, count, expected",
        [
            ([1.0], [0.0], 4, [1, 0, 0, 0]),
            ([2.0], [1.0], 2, [2, 2]),
            ([1.0, 1.0], [-0.5, 0.5], 4, [2, 0, 0.5, 0]),
        ],
    )
    def test_moments(self, a, x, count, expected):
        np.testing.assert_allclose(core.moments(core.SpikeSignal(a, x), count), expected, atol=1e-15)

    def test_moments_rejects_bad_count(self, pair):
        with pytest.raises(ValueError):
            core.moments(pair, 0)

    @pytest.mark.parametrize(
        "nodes, low",
        [([-0.5, 0.5], [-0.25, 0.0]), ([0.0, 0.0], [0.0, 0.0]), ([1.0, 2.0, 3.0], [-6.0, 11.0, -6.0])],
    )
    def test_vieta(self, nodes, low):
        np.testing.assert_allclose(core.vieta(nodes).low_coeffs, low, atol=1e-15)

    @pytest.mark.parametrize(
        "mu, H, E",
        [
            ([2, 2], [[2]], [[2, 2]]),
            ([2, 0, 0.5, 0], [[2, 0], [0, 0.5]], [[2, 0, 0.5], [0, 0.5, 0]]),
            ([1, 2, 3, 4], [[1, 2], [2, 3]], [[1, 2, 3], [2, 3, 4]]),
            ([1, 1, 1, 1], [[1, 1], [1, 1]], [[1, 1, 1], [1, 1, 1]]),
        ],
    )
    def test_hankel_layouts(self, mu, H, E):
        np.testing.assert_array_equal(core.hankel_matrix(mu), H)
        np.testing.assert_array_equal(core.extended_hankel_matrix(mu), E)

    def test_hankel_map(self):
        np.testing.assert_allclose(core.hankel_map([2, 0, 0.5, 0]).low_coeffs, [-0.25, 0], atol=1e-15)
        np.testing.assert_allclose(core.hankel_map([2, 2]).low_coeffs, [-1.0])
        with pytest.raises(SingularHankel):
            core.hankel_map([1, 1, 1, 1])

    @pytest.mark.parametrize(
        "mu, nodes",
        [([2, 2], [1.0]), ([1, 0], [0.0]), ([2, 0, 0.5, 0], [-0.5, 0.5]), ([3, 1, 3, 1], [-1.0, 1.0])],
    )
    def test_pade_numerator_matches_series_oracle(self, mu, nodes):
        q = core.vieta(nodes)
        b = core.pade_numerator(mu, q)
        series = series_expand_rational(b, q.coefficients, len(mu) + 3)
        np.testing.assert_allclose(series[: len(mu)], mu, atol=1e-14)

    def test_pade_numerator_frozen_values(self):
        np.testing.assert_allclose(core.pade_numerator([2, 2], core.vieta([1.0])), [2.0])
        np.testing.assert_allclose(core.pade_numerator([2, 0, 0.5, 0], core.vieta([-0.5, 0.5])), [0.0, 2.0])

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000))
    def test_commutativity_hm_pm_equals_vm(self, seed):
        (f,) = regular_corpus(1, seed)
        hm = core.hankel_map(core.moments(f, 2 * f.d)).low_coeffs
        vm = core.vieta(f.nodes).low_coeffs
        assert np.max(np.abs(hm - vm)) <= 1e-8 * max(1.0, np.max(np.abs(vm)))


class TestRoots:
    @pytest.mark.parametrize(
        "low, roots",
        [([-0.25, 0.0], [-0.5, 0.5]), ([1.0, 0.0], [-1j, 1j]), ([-6.0, 11.0, -6.0], [1, 2, 3])],
    )
    def test_known_roots(self, low, roots):
        r = core.polynomial_roots(core.MonicPolynomial(low))
        np.testing.assert_allclose(r.roots, roots, atol=1e-12)

    def test_amplitudes_from_nodes(self):
        np.testing.assert_allclose(core.amplitudes_from_nodes([2, 0, 0.5, 0], [-0.5, 0.5]), [1, 1])
        np.testing.assert_allclose(core.amplitudes_from_nodes([2, 2], [1.0]), [2])
        np.testing.assert_allclose(core.amplitudes_from_nodes([3, 1, 3, 1], [-1.0, 1.0]), [1, 2])

    def test_confluent_nodes_raise(self):
        with pytest.raises(NearDegenerateVandermonde):
            core.amplitudes_from_nodes([2, 0, 0.5, 0], [0.5, 0.5])


class TestSolve:
    def test_symmetric_pair(self):
        out = core.prony_solve([2, 0, 0.5, 0])
        assert out.status == "real" and out.rank == 2
        np.testing.assert_allclose(out.signal.amplitudes, [1, 1], atol=1e-14)
        np.testing.assert_allclose(out.signal.nodes, [-0.5, 0.5], atol=1e-14)

    def test_rank_deficient(self):
        out = core.prony_solve([1, 1, 1, 1])
        assert out.status == "rank_deficient" and out.rank == 1
        np.testing.assert_allclose(out.reduced.amplitudes, [1.0])
        np.testing.assert_allclose(out.reduced.nodes, [1.0])

    def test_complex(self):
        out = core.prony_solve([2, 0, -0.5, 0])
        assert out.status == "complex"
        np.testing.assert_allclose(np.sort_complex(out.nodes), [-0.5j, 0.5j], atol=1e-14)
        np.testing.assert_allclose(out.amplitudes, [1, 1], atol=1e-14)

    def test_unsolvable(self):
        out = core.prony_solve([0, 0, 0, 1])
        assert out.status == "unsolvable" and out.rank == 1

    def test_zero_moments(self):
        out = core.prony_solve([0, 0, 0, 0])
        assert out.status == "rank_deficient" and out.rank == 0 and out.reduced.d == 0

    def test_single_spike(self):
        out = core.prony_solve([2, 2])
        assert out.status == "real"
        assert out.signal.amplitudes[0] == pytest.approx(2) and out.signal.nodes[0] == pytest.approx(1)

    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 10_000))
    def test_round_trip(self, seed):
        (f,) = regular_corpus(1, seed, signs=True)
        out = core.prony_solve(core.moments(f, 2 * f.d))
        assert out.status == "real"
        assert out.signal.distance(f) <= 1e-8

    def test_solve_many_agrees_with_scalar(self):
        corpus = [f for f in regular_corpus(200, 3, ds=(3,), signs=True)]
        mus = np.array([core.moments(f, 6) for f in corpus])
        mus = np.vstack([mus, [[0, 0, 0, 0, 0, 1.0]], [[2, 0, -0.5, 0, 0.25, 0]]])
        batch = core.solve_many(mus)
        for i, mu in enumerate(mus):
            out = core.prony_solve(mu)
            assert batch.status[i] == out.status
            if out.status == "real":
                np.testing.assert_allclose(batch.nodes[i], out.signal.nodes, atol=1e-9)
                np.testing.assert_allclose(batch.amplitudes[i], out.signal.amplitudes, atol=1e-9)
