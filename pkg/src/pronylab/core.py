"""Spike trains, moments and the Prony solution pipeline.

A spike train ``F(x) = sum_j a_j delta(x - x_j)`` has power moments
``m_k = sum_j a_j x_j**k``. Recovering ``(a_j, x_j)`` from ``m_0 .. m_{2d-1}``
goes through three maps:

* the Prony map ``PM``: signal -> first 2d moments (:func:`moments`),
* the Vieta map ``VM``: nodes -> monic polynomial with those roots (:func:`vieta`),
* the Hankel map ``HM``: moments -> monic polynomial obtained from the
  Hankel linear system (:func:`hankel_map`),

with ``HM(PM(F)) == VM(F)``. :func:`prony_solve` chains ``HM``, a root
finder and a Vandermonde least-squares solve, and classifies degenerate
inputs by the rank of the extended Hankel matrix.
"""

from dataclasses import dataclass, field
from typing import ClassVar, Optional

import numpy as np
import scipy.linalg

from .exceptions import NearDegenerateVandermonde, NonConvergence, SingularHankel

EPS = np.finfo(float).eps

#: a root counts as real when ``|Im| <= TAU_REAL * (1 + |Re|)``
TAU_REAL = 1e-8
#: relative node separation below which the Vandermonde solve is refused
SEPARATION_TOL = 1e-10
#: relative residual accepted from the companion eigenvalue root finder
ROOT_RESIDUAL_TOL = 1e-6


def default_rank_tol(d):
    """Relative singular-value threshold ``2 d eps`` used for numerical rank."""
    return 2 * d * EPS


# ---------------------------------------------------------------------------
# Data types
# ---------------------------------------------------------------------------


def _frozen_array(values, dtype=float):
    arr = np.array(values, dtype=dtype).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SpikeSignal:
    """Real spike train with amplitudes ``A`` and nondecreasing nodes ``X``.

    Pairs ``(a_j, x_j)`` are reordered on construction so that the nodes
    are sorted; the arrays are read-only.
    """

    amplitudes: np.ndarray
    nodes: np.ndarray

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=float).reshape(-1)
        x = np.array(self.nodes, dtype=float).reshape(-1)
        if a.shape != x.shape:
            raise ValueError(f"got {a.size} amplitudes but {x.size} nodes")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(x))):
            raise ValueError("amplitudes and nodes must be finite")
        order = np.argsort(x, kind="stable")
        object.__setattr__(self, "amplitudes", _frozen_array(a[order]))
        object.__setattr__(self, "nodes", _frozen_array(x[order]))

    @property
    def d(self):
        return self.nodes.size

    def distance(self, other):
        """Max-norm distance ``max(||A - A'||, ||X - X'||)``."""
        if other.d != self.d:
            raise ValueError("signals have different numbers of spikes")
        if self.d == 0:
            return 0.0
        return float(
            max(
                np.max(np.abs(self.amplitudes - other.amplitudes)),
                np.max(np.abs(self.nodes - other.nodes)),
            )
        )

    def __repr__(self):
        return f"SpikeSignal(amplitudes={self.amplitudes.tolist()}, nodes={self.nodes.tolist()})"


@dataclass(frozen=True, eq=False)
class MomentVector:
    """The measurements ``m_0 .. m_{2d-1}`` of a d-spike signal."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size == 0 or v.size % 2:
            raise ValueError(f"a moment vector needs 2d > 0 entries, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise ValueError("moments must be finite")
        object.__setattr__(self, "values", _frozen_array(v))

    @property
    def d(self):
        return self.values.size // 2

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def as_moment_array(mu):
    """Return ``mu`` as a float array of even length (accepts MomentVector)."""
    if isinstance(mu, MomentVector):
        return np.array(mu.values)
    return np.array(MomentVector(mu).values)


@dataclass(frozen=True, eq=False)
class MonicPolynomial:
    """``Q(z) = c_0 + c_1 z + ... + c_{d-1} z**(d-1) + z**d``.

    ``low_coeffs`` holds ``(c_0, ..., c_{d-1})``. With the elementary
    symmetric functions ``e_i`` of the roots, ``c_{d-i} = (-1)**i e_i``.
    """

    low_coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.low_coeffs).reshape(-1)
        if not np.iscomplexobj(c):
            c = c.astype(float)
        object.__setattr__(self, "low_coeffs", _frozen_array(c, dtype=c.dtype))

    @property
    def d(self):
        return self.low_coeffs.size

    @property
    def coefficients(self):
        """All coefficients in ascending order, including the leading 1."""
        return np.append(self.low_coeffs, 1.0)

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(z, self.coefficients)

    def elementary_symmetric(self):
        """``(e_1, ..., e_d)`` of the roots, read off the coefficients."""
        i = np.arange(1, self.d + 1)
        return (-1.0) ** i * self.low_coeffs[self.d - i]

    @classmethod
    def from_roots(cls, roots):
        return vieta(roots)

    def __repr__(self):
        return f"MonicPolynomial(low_coeffs={self.low_coeffs.tolist()})"


@dataclass(frozen=True, eq=False)
class ComplexRootSet:
    """Roots of a monic polynomial, sorted by (real part, imaginary part)."""

    roots: np.ndarray
    residual: float = 0.0

    def is_real(self, tau_real=TAU_REAL):
        r = self.roots
        return bool(np.all(np.abs(r.imag) <= tau_real * (1.0 + np.abs(r.real))))

    @property
    def real_parts(self):
        return np.sort(self.roots.real)


# SolveOutcome is a small tagged union; ``status`` is the tag.


class SolveOutcome:
    status: ClassVar[str] = ""

    @property
    def is_real(self):
        return self.status == "real"


@dataclass(frozen=True, eq=False)
class RealSolution(SolveOutcome):
    signal: SpikeSignal
    rank: int
    condition: float
    residual: float
    status: ClassVar[str] = "real"


@dataclass(frozen=True, eq=False)
class ComplexSolution(SolveOutcome):
    amplitudes: np.ndarray
    nodes: np.ndarray
    rank: int
    condition: float
    residual: float
    status: ClassVar[str] = "complex"


@dataclass(frozen=True, eq=False)
class RankDeficient(SolveOutcome):
    """Extended Hankel rank ``r < d`` with a nonsingular leading minor.

    ``reduced`` is the real r-spike solution when one exists; the complex
    case is available through ``reduced_outcome``.
    """

    rank: int
    reduced: Optional[SpikeSignal]
    reduced_outcome: Optional[SolveOutcome]
    condition: float
    residual: float
    status: ClassVar[str] = "rank_deficient"


@dataclass(frozen=True, eq=False)
class Unsolvable(SolveOutcome):
    rank: int
    diagnostic: str
    condition: float = float("inf")
    residual: float = float("nan")
    status: ClassVar[str] = "unsolvable"


# ---------------------------------------------------------------------------
# The three maps
# ---------------------------------------------------------------------------


def power_moments(amplitudes, nodes, count):
    """``sum_j a_j x_j**k`` for ``k < count``; works for complex input."""
    a = np.asarray(amplitudes)
    x = np.asarray(nodes)
    k = np.arange(count)
    return np.power.outer(x, k).T @ a if x.size else np.zeros(count)


def moments(signal, count):
    """First ``count`` power moments of ``signal`` by direct summation.

    With ``count = 2 * signal.d`` this is the Prony map.
    """
    if int(count) != count or count < 1:
        raise ValueError(f"count must be a positive integer, got {count!r}")
    return power_moments(signal.amplitudes, signal.nodes, int(count)).astype(float)


def moments_many(amplitudes, nodes, count):
    """Row-wise moments for stacks ``amplitudes, nodes`` of shape (n, d)."""
    a = np.asarray(amplitudes)
    x = np.asarray(nodes)
    powers = x[..., None, :] ** np.arange(count)[:, None]
    return np.einsum("...kj,...j->...k", powers, a)


def vieta(nodes):
    """Monic polynomial whose roots are ``nodes`` (with multiplicity)."""
    x = np.asarray(nodes).reshape(-1)
    if x.size == 0:
        raise ValueError("need at least one node")
    c = np.polynomial.polynomial.polyfromroots(x)
    if not np.iscomplexobj(x):
        c = c.real
    return MonicPolynomial(c[:-1])


def hankel_matrix(mu):
    """d x d matrix with entry (i, j) = m_{i+j}."""
    m = as_moment_array(mu)
    d = m.size // 2
    return scipy.linalg.hankel(m[:d], m[d - 1 : 2 * d - 1])


def extended_hankel_matrix(mu):
    """d x (d+1) matrix with entry (i, j) = m_{i+j}."""
    m = as_moment_array(mu)
    d = m.size // 2
    return scipy.linalg.hankel(m[:d], m[d - 1 : 2 * d])


def hankel_solve(matrix, rhs, tol_rank=None):
    """Solve a square Hankel system with column-pivoted QR.

    Returns ``(solution, condition)``; the right-hand side may be a vector or
    a matrix of stacked columns. Raises :class:`SingularHankel` when the
    smallest singular value is below ``tol_rank * sigma_max``.
    """
    M = np.asarray(matrix, dtype=float)
    d = M.shape[0]
    tol = default_rank_tol(d) if tol_rank is None else tol_rank
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0 or s[-1] <= tol * s[0]:
        cond = np.inf if s[-1] == 0.0 else s[0] / s[-1]
        raise SingularHankel(
            f"Hankel matrix is numerically singular (sigma_min/sigma_max = {s[-1] / s[0] if s[0] else 0.0:.3g})",
            condition=cond,
        )
    Q, R, perm = scipy.linalg.qr(M, pivoting=True)
    y = scipy.linalg.solve_triangular(R, Q.T @ rhs)
    x = np.empty_like(y)
    x[perm] = y
    return x, float(s[0] / s[-1])


def hankel_map(mu, tol_rank=None):
    """The Hankel map: solve ``M_d(mu) c = -(m_d, ..., m_{2d-1})``.

    >>> hankel_map([2, 0, 0.5, 0]).low_coeffs.tolist()
    [-0.25, 0.0]
    """
    m = as_moment_array(mu)
    d = m.size // 2
    c, _ = hankel_solve(hankel_matrix(m), -m[d:], tol_rank)
    return MonicPolynomial(c)


def pade_numerator(mu, q):
    """Numerator ``P`` of the diagonal Pade approximant ``P/Q`` at infinity.

    ``P/Q = sum_k m_k z**(-k-1) + O(z**(-2d-1))`` holds when ``b_j`` is the
    polynomial part of ``Q(z) f(z)``, i.e.
    ``b_j = sum_{i=j+1}^{d} c_i m_{i-j-1}`` with ``c_d = 1``.
    """
    m = as_moment_array(mu)
    d = m.size // 2
    if q.d != d:
        raise ValueError(f"polynomial degree {q.d} does not match d = {d}")
    c = q.coefficients
    return np.array([sum(c[i] * m[i - j - 1] for i in range(j + 1, d + 1)) for j in range(d)])


# ---------------------------------------------------------------------------
# Roots and amplitudes
# ---------------------------------------------------------------------------


def companion_matrix(low_coeffs):
    c = np.asarray(low_coeffs)
    d = c.size
    C = np.zeros((d, d), dtype=np.result_type(c, float))
    C[1:, :-1] = np.eye(d - 1)
    C[:, -1] = -c
    return C


def _relative_residual(coeffs, roots):
    num = np.abs(np.polynomial.polynomial.polyval(roots, coeffs))
    den = np.polynomial.polynomial.polyval(np.abs(roots), np.abs(coeffs))
    return num / np.maximum(den, np.finfo(float).tiny)


def _newton_polish(coeffs, roots, steps):
    deriv = np.polynomial.polynomial.polyder(coeffs)
    r = roots.astype(complex)
    val = np.polynomial.polynomial.polyval(r, coeffs)
    for _ in range(steps):
        dval = np.polynomial.polynomial.polyval(r, deriv)
        ok = dval != 0
        step = np.where(ok, val / np.where(ok, dval, 1.0), 0.0)
        trial = r - step
        tval = np.polynomial.polynomial.polyval(trial, coeffs)
        better = np.abs(tval) < np.abs(val)
        if not np.any(better):
            break
        r = np.where(better, trial, r)
        val = np.where(better, tval, val)
    return r


def polynomial_roots(q, newton_steps=3):
    """Roots of a monic polynomial from its balanced companion matrix.

    LAPACK's nonsymmetric eigensolver balances the companion matrix; each
    eigenvalue is then polished by at most ``newton_steps`` Newton steps,
    a step being kept only if it lowers ``|Q|``.
    """
    if q.d < 1:
        raise ValueError("degree must be at least 1")
    coeffs = q.coefficients
    try:
        roots = np.linalg.eigvals(companion_matrix(q.low_coeffs))
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(f"eigenvalue iteration failed: {exc}") from exc
    roots = _newton_polish(coeffs, roots, newton_steps)
    res = _relative_residual(coeffs, roots)
    worst = float(np.max(res)) if res.size else 0.0
    if not np.all(np.isfinite(roots)) or worst > ROOT_RESIDUAL_TOL:
        raise NonConvergence("root residual too large", roots=roots, residual=worst)
    roots = roots[np.lexsort((roots.imag, roots.real))]
    return ComplexRootSet(roots=roots, residual=worst)


def min_gap(nodes):
    x = np.asarray(nodes)
    if x.size < 2:
        return np.inf
    diff = np.abs(x[:, None] - x[None, :])
    return float(np.min(diff[np.triu_indices(x.size, 1)]))


def amplitudes_from_nodes(mu, nodes, *, sep_tol=SEPARATION_TOL, full_output=False):
    """Least-squares amplitudes for the 2d x d Vandermonde system.

    Returns the amplitude vector, or ``(amplitudes, residual)`` when
    ``full_output`` is set; ``residual`` is the max-norm moment mismatch.
    """
    m = as_moment_array(mu)
    x = np.asarray(nodes).reshape(-1)
    scale = max(1.0, float(np.max(np.abs(x)))) if x.size else 1.0
    gap = min_gap(x)
    if gap <= sep_tol * scale:
        raise NearDegenerateVandermonde(f"nodes nearly collide (gap {gap:.3g})", min_gap=gap)
    V = np.power.outer(x, np.arange(m.size)).T
    a, *_ = np.linalg.lstsq(V, m.astype(V.dtype), rcond=None)
    if not full_output:
        return a
    return a, float(np.max(np.abs(V @ a - m)))


# ---------------------------------------------------------------------------
# Full pipeline
# ---------------------------------------------------------------------------


def numerical_rank(matrix, tol_rank=None):
    """Rank by singular values, threshold ``tol_rank * sigma_max``."""
    M = np.atleast_2d(matrix)
    s = np.linalg.svd(M, compute_uv=False)
    tol = default_rank_tol(min(M.shape)) if tol_rank is None else tol_rank
    if s.size == 0 or s[0] == 0.0:
        return 0, s
    return int(np.sum(s > tol * s[0])), s


def prony_solve(mu, *, tol_rank=None, tau_real=TAU_REAL):
    """Solve the Prony system for the moment vector ``mu``.

    The rank ``r`` of the extended d x (d+1) Hankel matrix decides the path:

    * ``r = d`` with ``M_d`` nonsingular: Hankel map, roots, amplitudes.
      Returns :class:`RealSolution` when every root is real to ``tau_real``
      (roots are then projected to their real parts), otherwise
      :class:`ComplexSolution`.
    * ``r < d`` with nonsingular leading r x r minor: solves the r-spike
      system on ``m_0 .. m_{2r-1}`` and returns :class:`RankDeficient`.
    * otherwise :class:`Unsolvable`.

    Failures are returned, never raised.
    """
    m = as_moment_array(mu)
    d = m.size // 2
    tol = default_rank_tol(d) if tol_rank is None else tol_rank
    ext = extended_hankel_matrix(m)
    r, s = numerical_rank(ext, tol)
    threshold = tol * s[0] if s[0] > 0 else 0.0

    if r == d:
        M = hankel_matrix(m)
        sM = np.linalg.svd(M, compute_uv=False)
        if sM[-1] <= threshold:
            return Unsolvable(rank=r, diagnostic="leading d x d minor is singular")
        c, cond = hankel_solve(M, -m[d:], tol_rank=0.0)
        q = MonicPolynomial(c)
        try:
            roots = polynomial_roots(q)
        except NonConvergence as exc:
            return Unsolvable(rank=r, diagnostic=str(exc), condition=cond)
        is_real = roots.is_real(tau_real)
        nodes = np.sort(roots.roots.real) if is_real else roots.roots
        try:
            amps, res = amplitudes_from_nodes(m, nodes, full_output=True)
        except NearDegenerateVandermonde as exc:
            return Unsolvable(
                rank=r, diagnostic=f"confluent nodes, not representable: {exc}", condition=cond
            )
        if is_real:
            return RealSolution(SpikeSignal(amps.real, nodes), rank=r, condition=cond, residual=res)
        return ComplexSolution(amplitudes=amps, nodes=nodes, rank=r, condition=cond, residual=res)

    if r == 0:
        empty = SpikeSignal([], [])
        return RankDeficient(
            rank=0,
            reduced=empty,
            reduced_outcome=None,
            condition=1.0,
            residual=float(np.max(np.abs(m))),
        )

    minor = ext[:r, :r]
    s_minor = np.linalg.svd(minor, compute_uv=False)
    if s_minor[-1] <= threshold:
        return Unsolvable(rank=r, diagnostic=f"rank {r} but leading {r} x {r} minor is singular")
    sub = prony_solve(m[: 2 * r], tol_rank=tol_rank, tau_real=tau_real)
    reduced = sub.signal if isinstance(sub, RealSolution) else None
    if isinstance(sub, RealSolution):
        res = np.max(np.abs(moments(sub.signal, 2 * d) - m))
    elif isinstance(sub, ComplexSolution):
        res = np.max(np.abs(power_moments(sub.amplitudes, sub.nodes, 2 * d) - m))
    else:
        res = np.nan
    return RankDeficient(
        rank=r,
        reduced=reduced,
        reduced_outcome=sub,
        condition=float(s_minor[0] / s_minor[-1]),
        residual=float(res),
    )


# ---------------------------------------------------------------------------
# Batched fast path
# ---------------------------------------------------------------------------


@dataclass
class BatchSolution:
    """Result of :func:`solve_many`.

    ``status`` holds the outcome tag of every row; ``amplitudes`` and
    ``nodes`` are NaN where the status is not ``"real"``.
    """

    amplitudes: np.ndarray
    nodes: np.ndarray
    status: np.ndarray
    outcomes: dict = field(default_factory=dict)

    @property
    def real(self):
        return self.status == "real"


def solve_many(mus, *, tol_rank=None, tau_real=TAU_REAL):
    """Vectorised :func:`prony_solve` over the rows of ``mus`` (shape (n, 2d)).

    Generic full-rank rows go through batched LAPACK calls. Complex rows
    only get a status (their nodes stay NaN). Any row that is rank
    deficient, has near-colliding or nearly real complex nodes, or a poor
    root residual is re-solved with :func:`prony_solve` and its outcome
    kept in ``outcomes``.
    """
    m = np.asarray(mus, dtype=float)
    if m.ndim != 2 or m.shape[1] % 2:
        raise ValueError("expected an (n, 2d) array of moment vectors")
    n, two_d = m.shape
    d = two_d // 2
    tol = default_rank_tol(d) if tol_rank is None else tol_rank
    amps = np.full((n, d), np.nan)
    nodes = np.full((n, d), np.nan)
    status = np.full(n, "", dtype=object)
    if n == 0:
        return BatchSolution(amps, nodes, status.astype(str))

    idx = np.arange(d)[:, None] + np.arange(d + 1)[None, :]
    ext = m[:, idx]
    s_ext = np.linalg.svd(ext, compute_uv=False)
    H = ext[:, :, :d]
    s_H = np.linalg.svd(H, compute_uv=False)
    good = np.all(np.isfinite(m), axis=1) & (s_ext[:, 0] > 0)
    good &= (s_ext[:, -1] > tol * s_ext[:, 0]) & (s_H[:, -1] > tol * s_ext[:, 0])

    fallback = ~good
    g = np.flatnonzero(good)
    if g.size:
        c = np.linalg.solve(H[g], -m[g, d:, None])[..., 0]
        C = np.zeros((g.size, d, d))
        C[:, np.arange(1, d), np.arange(d - 1)] = 1.0
        C[:, :, -1] = -c
        roots = np.linalg.eigvals(C)
        coeffs = np.concatenate([c, np.ones((g.size, 1))], axis=1)
        roots = _newton_polish_many(coeffs, roots, 3)
        res = _relative_residual_many(coeffs, roots)
        is_real = np.all(np.abs(roots.imag) <= tau_real * (1 + np.abs(roots.real)), axis=1)
        x = np.sort(roots.real, axis=1)
        gaps = np.min(np.diff(x, axis=1), axis=1) if d > 1 else np.full(g.size, np.inf)
        scale = np.maximum(1.0, np.max(np.abs(x), axis=1))
        res_ok = np.max(res, axis=1) <= ROOT_RESIDUAL_TOL
        ok = is_real & (gaps > SEPARATION_TOL * scale) & res_ok
        # well-separated from the real axis: complex without a second look
        far = np.any(np.abs(roots.imag) > 100 * tau_real * (1 + np.abs(roots.real)), axis=1)
        plainly_complex = far & res_ok
        status[g[plainly_complex]] = "complex"
        # borderline and suspicious rows go through the scalar path
        fallback[g[~ok & ~plainly_complex]] = True
        gr = g[ok]
        xr = x[ok]
        if gr.size:
            V = xr[:, None, :] ** np.arange(two_d)[None, :, None]
            Q, R = np.linalg.qr(V)
            rhs = np.einsum("nki,nk->ni", Q, m[gr])
            a = np.linalg.solve(R, rhs[..., None])[..., 0]
            amps[gr] = a
            nodes[gr] = xr
            status[gr] = "real"

    outcomes = {}
    for i in np.flatnonzero(fallback):
        out = prony_solve(m[i], tol_rank=tol_rank, tau_real=tau_real)
        outcomes[int(i)] = out
        status[i] = out.status
        if isinstance(out, RealSolution):
            amps[i] = out.signal.amplitudes
            nodes[i] = out.signal.nodes
    return BatchSolution(amps, nodes, status.astype(str), outcomes)


def _polyval_many(coeffs, z):
    # coeffs (n, d+1) ascending, z (n, k)
    out = np.zeros(z.shape, dtype=np.result_type(coeffs, z))
    for j in range(coeffs.shape[1] - 1, -1, -1):
        out = out * z + coeffs[:, j : j + 1]
    return out


def _newton_polish_many(coeffs, roots, steps):
    deriv = coeffs[:, 1:] * np.arange(1, coeffs.shape[1])
    r = roots.astype(complex)
    val = _polyval_many(coeffs, r)
    for _ in range(steps):
        dval = _polyval_many(deriv, r)
        ok = dval != 0
        trial = r - np.where(ok, val / np.where(ok, dval, 1.0), 0.0)
        tval = _polyval_many(coeffs, trial)
        better = np.abs(tval) < np.abs(val)
        r = np.where(better, trial, r)
        val = np.where(better, tval, val)
    return r


def _relative_residual_many(coeffs, roots):
    num = np.abs(_polyval_many(coeffs, roots))
    den = _polyval_many(np.abs(coeffs), np.abs(roots))
    return num / np.maximum(den, np.finfo(float).tiny)
