"""Classical problems that reduce to a Prony system.

* exponential sums ``y_k = sum a_j exp(k zeta_j)``: nodes are ``exp(zeta_j)``;
* Gaussian quadrature: nodes and weights of a measure from its moments;
* Waring decomposition of binary forms of odd degree in the chart ``x = 1``.
"""

from dataclasses import dataclass
from math import comb
from typing import Optional, Tuple

import numpy as np

from . import core
from .exceptions import GenericityFailure, NotRealSolvable, SolveFailed


def _effective(outcome):
    """Outcome carrying the spikes: the reduced one for rank-deficient input."""
    if isinstance(outcome, core.RankDeficient):
        return outcome.reduced_outcome
    return outcome


def _parts(outcome):
    if isinstance(outcome, core.RealSolution):
        return outcome.signal.amplitudes, outcome.signal.nodes
    if isinstance(outcome, core.ComplexSolution):
        return outcome.amplitudes, outcome.nodes
    return None


def _spikes(mu, **solve_kw):
    outcome = core.prony_solve(mu, **solve_kw)
    parts = _parts(_effective(outcome))
    if parts is None:
        diag = getattr(outcome, "diagnostic", "no solution")
        raise SolveFailed(f"Prony system unsolvable: {diag}", outcome=outcome)
    return outcome, parts[0], parts[1]


def _residual(a, x, m):
    return float(np.max(np.abs(core.power_moments(a, x, m.size) - m)))


# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ExponentialFit:
    """``exponents[j]`` is ``log(nodes[j])`` for positive real nodes, else ``None``."""

    amplitudes: np.ndarray
    nodes: np.ndarray
    exponents: Tuple[Optional[float], ...]
    residual: float
    outcome: core.SolveOutcome

    def __call__(self, k):
        """Evaluate the fitted sum at (possibly non-integer) ``k``."""
        k = np.asarray(k, dtype=float)
        z = np.asarray(self.nodes, dtype=complex)
        vals = np.sum(self.amplitudes * z ** k[..., None], axis=-1)
        return vals.real if np.isrealobj(self.nodes) else vals


def exponential_fit(samples, **solve_kw):
    """Fit ``y_k = sum_j a_j exp(k zeta_j)`` to ``2d`` equispaced samples.

    >>> fit = exponential_fit([2.0, 2.0])
    >>> fit.exponents
    (0.0,)
    """
    y = core.as_moment_array(samples)
    outcome, a, x = _spikes(y, **solve_kw)
    exps = []
    for xj in x:
        if np.isrealobj(xj) and xj > 0:
            exps.append(float(np.log(xj)))
        else:
            exps.append(None)
    return ExponentialFit(a, x, tuple(exps), _residual(a, x, y), outcome)


# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Quadrature:
    nodes: np.ndarray
    weights: np.ndarray
    exactness_degree: int

    def __call__(self, g):
        """Apply the rule to a vectorised function ``g``."""
        return float(np.sum(self.weights * g(self.nodes)))


def gauss_quadrature_from_moments(moments, **solve_kw):
    """Gaussian rule whose nodes and weights reproduce ``2d`` moments.

    For a positive measure this is the classical Gauss rule. Moments of a
    measure supported on fewer than ``d`` points give the shorter exact rule.

    >>> q = gauss_quadrature_from_moments([2, 0, 2 / 3, 0])
    >>> np.round(q.nodes * np.sqrt(3), 12)
    array([-1.,  1.])
    """
    m = core.as_moment_array(moments)
    outcome = core.prony_solve(m, **solve_kw)
    eff = _effective(outcome)
    if not isinstance(eff, core.RealSolution):
        raise NotRealSolvable(f"moments admit no real quadrature (status {outcome.status})")
    return Quadrature(eff.signal.nodes, eff.signal.amplitudes, m.size - 1)


# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WaringDecomposition:
    """``P(x, y) = sum_j (eta_j x + zeta_j y)**m`` with ``zeta_j = eta_j xi_j``.

    ``weights`` are the Prony amplitudes ``eta_j**m``. For odd ``m`` and real
    weights ``eta_j`` is the real ``m``-th root.
    """

    m: int
    weights: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    residual: float

    @property
    def zeta(self):
        return self.eta * self.xi

    @property
    def forms(self):
        return list(zip(self.eta, self.zeta))

    def coefficients(self):
        return binary_form_coefficients(self.forms, self.m)


def binary_form_coefficients(forms, m):
    """Coefficients ``b_i`` of ``x**(m-i) y**i`` in ``sum (eta x + zeta y)**m``."""
    b = np.zeros(m + 1, dtype=complex)
    for eta, zeta in forms:
        b += [comb(m, i) * eta ** (m - i) * zeta**i for i in range(m + 1)]
    return b.real if np.all(b.imag == 0) else b


def _mth_root(w, m):
    if np.isrealobj(w):
        return np.sign(w) * np.abs(w) ** (1.0 / m)
    return np.asarray(w, dtype=complex) ** (1.0 / m)


def waring_decompose(coeffs, d=None, **solve_kw):
    """Write a binary form of odd degree ``m`` as a sum of ``(m+1)/2`` powers.

    ``coeffs`` are ``b_0..b_m`` (coefficient of ``x**(m-i) y**i``). Fewer
    powers are returned when the form admits them. Forms needing a pure
    ``y**m`` term are outside the chart and raise :class:`GenericityFailure`.
    """
    b = np.asarray(coeffs, dtype=float)
    if b.ndim != 1 or b.size < 2 or not np.all(np.isfinite(b)):
        raise ValueError("coeffs must be a finite vector of length m + 1 >= 2")
    m = b.size - 1
    if m % 2 == 0:
        raise ValueError("only odd degrees give a square Prony system")
    if d is not None and d != (m + 1) // 2:
        raise ValueError(f"degree {m} forces d = {(m + 1) // 2}, got {d}")
    mu = b / np.array([comb(m, i) for i in range(m + 1)])
    try:
        _, w, xi = _spikes(mu, **solve_kw)
    except SolveFailed as exc:
        raise GenericityFailure(
            f"form is not generic in the chart x = 1 ({exc.outcome.diagnostic}); "
            "a power of y alone may be needed"
        ) from exc
    eta = _mth_root(w, m)
    dec = WaringDecomposition(m, w, xi, eta, 0.0)
    residual = float(np.max(np.abs(dec.coefficients() - b)))
    return WaringDecomposition(m, w, xi, eta, residual)
