import numpy as np
import pytest
from conftest import regular_corpus
from hypothesis import given, settings
from hypothesis import strategies as st
from oracle import brute_force_solve

from pronylab import core, solvability
from pronylab.exceptions import HypothesisViolated


@pytest.mark.parametrize(
    "mu, rank, ok",
    [([2, 0, 0.5, 0], 2, True), ([1, 1, 1, 1], 1, True), ([0, 0, 0, 1], 1, False), ([2, 0, -0.5, 0], 2, True)],
)
def test_solvable_examples(mu, rank, ok):
    v = solvability.solvable(mu)
    assert v.rank == rank and v.solvable is ok and v.minor_nonsingular is ok


def test_unsolvable_instance_has_no_real_fit_in_the_oracle_box():
    *_, res = brute_force_solve([0, 0, 0, 1], 2)
    assert res > 1e-2


def test_tolerance_must_be_positive():
    with pytest.raises(ValueError):
        solvability.solvable([2, 0, 0.5, 0], tol=0.0)


@pytest.mark.parametrize(
    "low, expected",
    [([-1.0, 0.0], True), ([1.0, 0.0], False), ([0.0, 0.0], True), ([-6.0, 11.0, -6.0], True), ([0.0, 0.0, 0.0], True)],
)
def test_is_hyperbolic(low, expected):
    assert solvability.is_hyperbolic(core.MonicPolynomial(low)) is expected


def test_multiple_roots_with_complex_factor_are_not_hyperbolic():
    # (z - 1)^2 (z^2 + 1)
    q = core.MonicPolynomial(np.polynomial.polynomial.polyfromroots([1, 1, 1j, -1j]).real[:-1])
    assert not solvability.is_hyperbolic(q)
    q = core.MonicPolynomial(np.polynomial.polynomial.polyfromroots([1, 1, 2, 2, -3])[:-1])
    assert solvability.is_hyperbolic(q)


def test_sturm_count():
    chain = solvability.sturm_sequence(np.polynomial.polynomial.polyfromroots([-2, 0.5, 3]))
    assert solvability.count_distinct_real_roots(chain) == 3
    chain = solvability.sturm_sequence([1.0, 0.0, 1.0])
    assert solvability.count_distinct_real_roots(chain) == 0


def test_discriminant_sign():
    assert solvability.discriminant(core.MonicPolynomial([-1.0, 0.0])) == pytest.approx(4.0)
    assert solvability.discriminant(core.MonicPolynomial([1.0, 0.0])) == pytest.approx(-4.0)


@pytest.mark.parametrize(
    "mu, expected",
    [
        ([2, 0, 0.5, 0], True),
        ([2, 0, -0.5, 0], False),
        (core.moments(core.SpikeSignal([1, -1], [-0.3, 0.3]), 4), True),
    ],
)
def test_real_solvable_examples(mu, expected):
    v = solvability.real_solvable(mu)
    assert v.real_solvable is expected and v.hyperbolic is expected


def test_real_solvable_requires_nonsingular_hankel():
    with pytest.raises(HypothesisViolated) as info:
        solvability.real_solvable([1, 1, 1, 1])
    assert info.value.verdict.rank == 1


def test_complex_instance_is_not_fit_by_real_oracle():
    *_, res = brute_force_solve([2, 0, -0.5, 0], 2)
    assert res > 1e-2


@pytest.mark.parametrize(
    "mu, expected",
    [
        ([2, 0, 0.5, 0], True),
        ([1, 1, 1, 1], False),
        (core.moments(core.SpikeSignal([1, 2, 3], [-0.5, 0, 0.5]), 6), True),
        (core.moments(core.SpikeSignal([1, -1], [-0.3, 0.3]), 4), False),
    ],
)
def test_hamburger_positive_definite(mu, expected):
    assert solvability.hamburger_positive_definite(mu) is expected


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_real_signals_are_real_solvable(seed):
    (f,) = regular_corpus(1, seed, signs=True)
    v = solvability.real_solvable(core.moments(f, 2 * f.d))
    assert v.real_solvable and v.solvable


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_real_solvable_implies_solvable_and_agrees_with_solver(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 5))
    mu = rng.normal(size=2 * d)
    try:
        v = solvability.real_solvable(mu)
    except HypothesisViolated:
        return
    if v.real_solvable:
        assert v.solvable
    out = core.prony_solve(mu)
    if not v.on_boundary and out.status in ("real", "complex"):
        assert (out.status == "real") == v.real_solvable


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_positive_measures_are_positive_definite_and_hyperbolic(seed):
    (f,) = regular_corpus(1, seed)
    mu = core.moments(f, 2 * f.d)
    assert solvability.hamburger_positive_definite(mu)
    assert solvability.real_solvable(mu).hyperbolic
