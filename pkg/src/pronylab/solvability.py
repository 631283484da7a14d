"""Solvability and real solvability of Prony systems.

Solvability is read off the rank stratification of the extended Hankel
matrix: with ``r = rank M~_d(mu)`` the system is solvable exactly when the
leading r x r minor is nonzero. Over the reals (and with ``det M_d != 0``)
it is solvable exactly when ``HM(mu)`` is hyperbolic, i.e. has only real
roots; hyperbolicity is decided with Sturm sequences.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import core
from .exceptions import HypothesisViolated, NonConvergence

#: relative discriminant below which a polynomial is treated as lying on
#: the boundary of the hyperbolic set (multiple real root)
BOUNDARY_TOL = 1e-10
#: a Sturm remainder whose max-norm is below this (relative to the unit
#: max-norm dividend) is taken to be zero
STURM_ZERO_TOL = 64 * core.EPS


@dataclass(frozen=True)
class SolvabilityVerdict:
    rank: int
    minor_nonsingular: bool
    solvable: bool
    condition_estimate: float
    determinant: float
    hyperbolic: Optional[bool] = None
    real_solvable: Optional[bool] = None
    on_boundary: Optional[bool] = None


@dataclass(frozen=True)
class Hyperbolicity:
    """Outcome of :func:`hyperbolicity`.

    ``method`` is ``"sturm"`` or, near the boundary of the hyperbolic set,
    ``"sturm+roots"``: there a polynomial also counts as hyperbolic when
    its roots are real to the ``tau_real`` tolerance.
    """

    hyperbolic: bool
    on_boundary: bool
    distinct_real_roots: int
    method: str
    relative_discriminant: float


# ---------------------------------------------------------------------------
# Sturm sequences
# ---------------------------------------------------------------------------


def _trim(p, tol=0.0):
    p = np.asarray(p, dtype=float)
    scale = np.max(np.abs(p)) if p.size else 0.0
    n = p.size
    while n > 1 and abs(p[n - 1]) <= tol * scale:
        n -= 1
    return p[:n]


def _remainder(num, den):
    """Remainder of ascending-coefficient polynomial division."""
    r = np.array(num, dtype=float)
    dd = den.size - 1
    lead = den[-1]
    for k in range(r.size - 1, dd - 1, -1):
        f = r[k] / lead
        r[k - dd : k + 1] -= f * den
        r[k] = 0.0
    return r[:dd] if dd > 0 else np.zeros(1)


def sturm_sequence(coeffs, zero_tol=STURM_ZERO_TOL):
    """Sturm chain of a real polynomial (ascending coefficients).

    Each member is rescaled to unit max-norm, which leaves its signs intact.
    The chain stops at the first remainder that vanishes to ``zero_tol``; the
    last member is then (a multiple of) ``gcd(p, p')``.
    """
    p = _trim(coeffs)
    chain = [p / np.max(np.abs(p))]
    if p.size == 1:
        return chain
    dp = np.polynomial.polynomial.polyder(p)
    chain.append(dp / np.max(np.abs(dp)))
    while chain[-1].size > 1:
        rem = -_remainder(chain[-2], chain[-1])
        if np.max(np.abs(rem)) <= zero_tol:
            break
        rem = _trim(rem, zero_tol)
        chain.append(rem / np.max(np.abs(rem)))
    return chain


def _variations(signs):
    s = [v for v in signs if v != 0]
    return sum(1 for a, b in zip(s, s[1:]) if a != b)


def count_distinct_real_roots(chain):
    """Distinct real roots from sign variations of the chain at -inf and +inf.

    The signs at +-inf equal those at +-B for any B beyond every root of
    every chain member, so this is the count over a Cauchy-bound interval.
    """
    at_pos = [np.sign(p[-1]) for p in chain]
    at_neg = [np.sign(p[-1]) * (-1) ** (p.size - 1) for p in chain]
    return _variations(at_neg) - _variations(at_pos)


def _sturm_hyperbolic(coeffs):
    chain = sturm_sequence(coeffs)
    deg = chain[0].size - 1
    if deg <= 1:
        return True, deg
    k = count_distinct_real_roots(chain)
    g = chain[-1]
    g_deg = g.size - 1
    if g_deg == 0:
        return k == deg, k
    # repeated roots: p = g * (square-free part)
    ok_g, _ = _sturm_hyperbolic(g)
    return (k == deg - g_deg) and ok_g, k


# ---------------------------------------------------------------------------
# Discriminant and hyperbolicity
# ---------------------------------------------------------------------------


def sylvester_matrix(p, q):
    """Sylvester matrix of two polynomials given in ascending order."""
    p = np.asarray(p, dtype=float)[::-1]
    q = np.asarray(q, dtype=float)[::-1]
    m, n = p.size - 1, q.size - 1
    S = np.zeros((m + n, m + n))
    for i in range(n):
        S[i, i : i + m + 1] = p
    for i in range(m):
        S[n + i, i : i + n + 1] = q
    return S


def discriminant(q):
    """Discriminant ``prod_{i<j} (r_i - r_j)**2`` of a monic polynomial."""
    d = q.d
    if d == 1:
        return 1.0
    c = q.coefficients
    res = np.linalg.det(sylvester_matrix(c, np.polynomial.polynomial.polyder(c)))
    return float((-1) ** (d * (d - 1) // 2) * res)


def relative_discriminant(q, roots=None):
    """Smallest pairwise discriminant factor relative to the root scale.

    ``min_{i<j} |r_i - r_j|**2 / (2 S)**2`` with ``S = max(1, max |r_k|)``.
    It vanishes exactly where the discriminant does, but unlike the full
    product it does not shrink just because ``d`` is large.
    """
    if q.d == 1:
        return 1.0
    if roots is None:
        roots = core.polynomial_roots(q).roots
    S = max(1.0, float(np.max(np.abs(roots))))
    gaps = np.abs(roots[:, None] - roots[None, :])[np.triu_indices(q.d, 1)]
    return float(np.min(gaps) ** 2 / (2 * S) ** 2)


def hyperbolicity(q, tau_real=core.TAU_REAL):
    """Decide whether every root of ``q`` is real.

    The Sturm count is exact for exact coefficients, including multiple
    roots. When :func:`relative_discriminant` is below ``BOUNDARY_TOL`` the
    result is flagged ``on_boundary`` and a root-based test with
    ``tau_real`` may also accept the polynomial.
    """
    hyp, k = _sturm_hyperbolic(q.coefficients)
    try:
        roots = core.polynomial_roots(q)
        rel = relative_discriminant(q, roots.roots)
    except NonConvergence:
        roots, rel = None, 0.0
    on_boundary = rel < BOUNDARY_TOL
    method = "sturm"
    if on_boundary and not hyp:
        method = "sturm+roots"
        hyp = roots is not None and roots.is_real(tau_real)
    return Hyperbolicity(bool(hyp), bool(on_boundary), int(k), method, float(rel))


def is_hyperbolic(q, tau_real=core.TAU_REAL):
    """True iff every root of the monic polynomial ``q`` is real.

    >>> is_hyperbolic(core.MonicPolynomial([1.0, 0.0]))
    False
    """
    return hyperbolicity(q, tau_real).hyperbolic


def roots_are_real(q, tau_real=core.TAU_REAL):
    """Root-based hyperbolicity test (companion eigenvalues + tolerance)."""
    return core.polynomial_roots(q).is_real(tau_real)


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------


def _base_verdict(m, tol):
    ext = core.extended_hankel_matrix(m)
    r, s = core.numerical_rank(ext, tol)
    threshold = tol * s[0] if s.size and s[0] > 0 else 0.0
    if r == 0:
        minor_ok, cond = True, 1.0
    else:
        s_minor = np.linalg.svd(ext[:r, :r], compute_uv=False)
        minor_ok = bool(s_minor[-1] > threshold)
        cond = float(s_minor[0] / s_minor[-1]) if s_minor[-1] > 0 else np.inf
    det = float(np.linalg.det(core.hankel_matrix(m)))
    return SolvabilityVerdict(
        rank=r,
        minor_nonsingular=minor_ok,
        solvable=minor_ok,
        condition_estimate=cond,
        determinant=det,
    )


def solvable(mu, tol=None):
    """Rank-stratification test for (complex) solvability.

    ``tol`` is the relative singular-value threshold used both for the rank
    and for the nonsingularity of the leading r x r minor.
    """
    m = core.as_moment_array(mu)
    d = m.size // 2
    tol = core.default_rank_tol(d) if tol is None else tol
    if tol <= 0:
        raise ValueError("tol must be positive")
    return _base_verdict(m, tol)


def real_solvable(mu, tol=None, tau_real=core.TAU_REAL):
    """Real solvability for moment vectors with nonsingular ``M_d``.

    Raises :class:`HypothesisViolated` (carrying the rank verdict) when
    ``M_d(mu)`` is numerically singular.
    """
    m = core.as_moment_array(mu)
    d = m.size // 2
    tol = core.default_rank_tol(d) if tol is None else tol
    verdict = _base_verdict(m, tol)
    M = core.hankel_matrix(m)
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0 or s[-1] <= tol * s[0]:
        raise HypothesisViolated("det M_d(mu) vanishes numerically", verdict=verdict)
    q = core.hankel_map(m, tol_rank=tol)
    h = hyperbolicity(q, tau_real)
    return SolvabilityVerdict(
        rank=verdict.rank,
        minor_nonsingular=verdict.minor_nonsingular,
        solvable=verdict.solvable,
        condition_estimate=float(s[0] / s[-1]),
        determinant=verdict.determinant,
        hyperbolic=h.hyperbolic,
        real_solvable=h.hyperbolic and verdict.solvable,
        on_boundary=h.on_boundary,
    )


def hamburger_positive_definite(mu, tol=None):
    """True iff every leading principal minor of ``M_d(mu)`` is positive.

    Checked through the pivots of an unpivoted elimination (each pivot is
    a ratio of consecutive leading minors), with a relative floor ``tol``.
    """
    M = core.hankel_matrix(mu).astype(float)
    d = M.shape[0]
    tol = core.default_rank_tol(d) if tol is None else tol
    scale = np.max(np.abs(M))
    if scale == 0:
        return False
    A = M.copy()
    for k in range(d):
        pivot = A[k, k]
        if not pivot > tol * scale:
            return False
        A[k + 1 :, k:] -= np.outer(A[k + 1 :, k] / pivot, A[k, k:])
    return True
