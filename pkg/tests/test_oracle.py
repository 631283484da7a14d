import numpy as np
import pytest
from oracle import brute_force_solve, series_expand_rational

from pronylab import core


def test_series_examples():
    assert series_expand_rational([2], [-1, 1], 4) == [2, 2, 2, 2]
    assert series_expand_rational([1], [0, 1], 3) == [1, 0, 0]
    np.testing.assert_allclose(series_expand_rational([0, 2], [-0.25, 0, 1], 6), core.moments(core.SpikeSignal([1, 1], [-0.5, 0.5]), 6))


def test_series_needs_monic():
    with pytest.raises(ValueError):
        series_expand_rational([1], [1, 2], 3)


def test_brute_force_known_solutions():
    a, x, r = brute_force_solve([2, 0, 0.5, 0], 2)
    assert r < 1e-10
    np.testing.assert_allclose(a, [1, 1], atol=1e-6)
    np.testing.assert_allclose(x, [-0.5, 0.5], atol=1e-6)
    a, x, r = brute_force_solve([2, 2], 1)
    assert r < 1e-10 and a[0] == pytest.approx(2) and x[0] == pytest.approx(1)


def test_brute_force_certifies_complex_case():
    *_, r = brute_force_solve([2, 0, -0.5, 0], 2)
    assert r > 0.1


@pytest.mark.parametrize("seed", range(6))
def test_oracle_agrees_with_solver(seed):
    rng = np.random.default_rng(seed)
    x = np.sort(rng.uniform(-1.5, 1.5, 2))
    if x[1] - x[0] < 0.2:
        x[1] = x[0] + 0.2 + rng.uniform(0, 0.5)
    a = rng.uniform(0.5, 2, 2) * rng.choice([-1, 1], 2)
    mu = core.moments(core.SpikeSignal(a, x), 4)
    oa, ox, r = brute_force_solve(mu, 2, amp_box=(-3, 3), node_box=(-2.5, 2.5))
    out = core.prony_solve(mu)
    assert r < 1e-8
    np.testing.assert_allclose(ox, out.signal.nodes, atol=1e-4)
    np.testing.assert_allclose(oa, out.signal.amplitudes, atol=1e-4)
