"""Prony varieties and Prony curves.

Fixing the first ``q + 1`` moments of a d-spike signal (``d <= q <= 2d-1``)
cuts out a Prony variety. In the polynomial space it is an affine subspace
given by linear equations in the coefficients; for ``q = 2d - 2`` it is a
line, the polynomial Prony curve, parametrised affinely by the free last
moment ``t = m_{2d-1}``::

    c(t) = slope * t + intercept

The Hankel matrix ``M_d`` only involves ``m_0 .. m_{2d-2}`` and is therefore
the same at every point of the curve.

Index convention for :class:`LinearVarietySystem`: the unknowns are written
``u_1 .. u_d`` with ``u_i`` the coefficient of ``z**(d-i)``, i.e.
``u_i = low_coeffs[d - i]``. Substituting nodes therefore uses the signed
elementary symmetric functions ``u_i = (-1)**i e_i(x)``.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import core
from .exceptions import NearDegenerateVandermonde, NoFeasiblePoint, NonConvergence, SingularHankel
from .solvability import discriminant, hyperbolicity

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
BISECTION_MAX_ITER = 80


# ---------------------------------------------------------------------------
# Linear systems for S^V_q
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LinearVarietySystem:
    """Rows ``k = d .. q``: ``sum_i mu_{k-i} u_i = -mu_k``."""

    d: int
    q: int
    matrix: np.ndarray
    rhs: np.ndarray

    @staticmethod
    def unknowns_from_low_coeffs(low_coeffs):
        return np.asarray(low_coeffs)[::-1].copy()

    @staticmethod
    def low_coeffs_from_unknowns(u):
        return np.asarray(u)[::-1].copy()

    def residual(self, poly):
        """Max-norm residual of the equations at a monic polynomial."""
        u = self.unknowns_from_low_coeffs(poly.low_coeffs)
        return float(np.max(np.abs(self.matrix @ u - self.rhs)))

    def node_residual(self, nodes):
        """Residual after substituting signed symmetric functions of ``nodes``."""
        return self.residual(core.vieta(nodes))

    def solve(self):
        """The unique polynomial on a full (``q = 2d - 1``) system."""
        if self.q != 2 * self.d - 1:
            raise ValueError("the variety is a single point only for q = 2d - 1")
        u = np.linalg.solve(self.matrix, self.rhs)
        return core.MonicPolynomial(self.low_coeffs_from_unknowns(u))


def variety_linear_system(mu, q, d=None):
    """Linear equations of the polynomial Prony variety ``S^V_q(mu)``.

    ``mu`` needs at least ``q + 1`` entries; ``d`` defaults to ``len(mu) // 2``.
    """
    m = np.asarray(getattr(mu, "values", mu), dtype=float).reshape(-1)
    d = m.size // 2 if d is None else int(d)
    if not d <= q <= 2 * d - 1:
        raise ValueError(f"need d <= q <= 2d-1, got d={d}, q={q}")
    if m.size < q + 1:
        raise ValueError(f"need at least q+1 = {q + 1} moments")
    rows = np.array([[m[k - i] for i in range(1, d + 1)] for k in range(d, q + 1)])
    rhs = -m[d : q + 1]
    return LinearVarietySystem(d=d, q=q, matrix=rows, rhs=rhs)


def sample_variety(mu, q, free_moments, **solve_kw):
    """Points of ``S_q(mu)`` for given values of the free moments.

    ``free_moments`` has shape ``(n, 2d-1-q)`` and replaces
    ``m_{q+1} .. m_{2d-1}``. Returns ``(coefficients, outcomes)`` where
    ``coefficients`` is ``(n, d)`` (NaN rows where ``M_d`` is singular) and
    ``outcomes`` the matching :func:`core.prony_solve` results.
    """
    m = core.as_moment_array(mu)
    d = m.size // 2
    free = np.atleast_2d(np.asarray(free_moments, dtype=float))
    n_free = 2 * d - 1 - q
    if free.shape[1] != n_free:
        raise ValueError(f"expected {n_free} free moments per point")
    coeffs = np.full((free.shape[0], d), np.nan)
    outcomes = []
    for i, row in enumerate(free):
        full = np.concatenate([m[: q + 1], row])
        try:
            coeffs[i] = core.hankel_map(full).low_coeffs
        except SingularHankel:
            pass
        outcomes.append(core.prony_solve(full, **solve_kw))
    return coeffs, outcomes


# ---------------------------------------------------------------------------
# Prony curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PronyCurve:
    """Polynomial Prony curve ``c(t) = slope * t + intercept``."""

    d: int
    fixed_moments: np.ndarray
    slope: np.ndarray
    intercept: np.ndarray
    condition: float
    affinity_residual: float = 0.0

    @property
    def hankel(self):
        return core.hankel_matrix(np.append(self.fixed_moments, 0.0))

    def coefficients(self, t):
        """Low coefficients at ``t``; shape ``(d,)`` or ``(len(t), d)``."""
        t = np.asarray(t, dtype=float)
        return np.multiply.outer(t, self.slope) + self.intercept

    def polynomial(self, t):
        return core.MonicPolynomial(self.coefficients(float(t)))

    def moment_vector(self, t):
        return np.append(self.fixed_moments, float(t))

    def signal(self, t, tau_real=core.TAU_REAL):
        """Real signal on the curve at ``t``, or None if there is none."""
        q = self.polynomial(t)
        try:
            roots = core.polynomial_roots(q)
        except NonConvergence:
            return None
        if not roots.is_real(tau_real):
            return None
        nodes = np.sort(roots.roots.real)
        try:
            a = core.amplitudes_from_nodes(self.moment_vector(t), nodes)
        except NearDegenerateVandermonde:
            return None
        return core.SpikeSignal(a.real, nodes)


def prony_curve(mu_tilde, tol_rank=None):
    """Prony curve through the first ``2d - 1`` moments ``mu_tilde``.

    Solves ``M_d c = -(m_d, ..., m_{2d-2}, 0)`` for the intercept and
    ``M_d c = -e_d`` for the slope, sharing one factorisation of ``M_d``.
    Raises :class:`SingularHankel` if ``M_d`` is singular.
    """
    mt = np.asarray(getattr(mu_tilde, "values", mu_tilde), dtype=float).reshape(-1)
    if mt.size % 2 != 1:
        raise ValueError("mu_tilde must hold 2d - 1 moments")
    d = (mt.size + 1) // 2
    M = core.hankel_matrix(np.append(mt, 0.0))
    rhs = np.zeros((d, 2))
    rhs[:, 0] = -np.append(mt[d:], 0.0)
    rhs[-1, 1] = -1.0
    sol, cond = core.hankel_solve(M, rhs, tol_rank)
    intercept, slope = sol[:, 0], sol[:, 1]

    # three-point check against independent Hankel solves
    scale = max(1.0, float(np.max(np.abs(mt))))
    worst = 0.0
    for t in (-scale, 0.0, scale):
        direct = core.hankel_solve(M, -np.append(mt[d:], t), tol_rank)[0]
        ref = max(1.0, float(np.max(np.abs(direct))))
        worst = max(worst, float(np.max(np.abs(slope * t + intercept - direct))) / ref)
    return PronyCurve(
        d=d,
        fixed_moments=mt.copy(),
        slope=slope,
        intercept=intercept,
        condition=cond,
        affinity_residual=worst,
    )


# ---------------------------------------------------------------------------
# Tracing
# ---------------------------------------------------------------------------


@dataclass
class CurveSample:
    t: float
    coefficients: np.ndarray
    roots: np.ndarray
    hyperbolic: bool
    nodes: Optional[np.ndarray]
    amplitudes: Optional[np.ndarray]
    min_gap: float
    max_abs_amplitude: float


@dataclass
class CurveTrace:
    curve: PronyCurve
    samples: List[CurveSample]
    crossings: List[float] = field(default_factory=list)

    @property
    def t(self):
        return np.array([s.t for s in self.samples])

    @property
    def hyperbolic(self):
        return np.array([s.hyperbolic for s in self.samples])

    @property
    def min_gaps(self):
        return np.array([s.min_gap for s in self.samples])

    @property
    def max_abs_amplitudes(self):
        return np.array([s.max_abs_amplitude for s in self.samples])


def _sample_at(curve, t):
    coeffs = curve.coefficients(t)
    q = core.MonicPolynomial(coeffs)
    try:
        roots = core.polynomial_roots(q).roots
    except NonConvergence as exc:
        roots = exc.roots if exc.roots is not None else np.full(curve.d, np.nan + 0j)
    hyp = hyperbolicity(q).hyperbolic
    nodes = amps = None
    gap, amax = np.nan, np.nan
    if hyp:
        nodes = np.sort(roots.real)
        gap = core.min_gap(nodes)
        try:
            amps = core.amplitudes_from_nodes(curve.moment_vector(t), nodes).real
            amax = float(np.max(np.abs(amps)))
        except NearDegenerateVandermonde:
            amax = np.inf
    return CurveSample(
        t=float(t),
        coefficients=coeffs,
        roots=roots,
        hyperbolic=hyp,
        nodes=nodes,
        amplitudes=amps,
        min_gap=gap,
        max_abs_amplitude=amax,
    )


def _is_hyperbolic_at(curve, t):
    return hyperbolicity(curve.polynomial(t)).hyperbolic


def locate_boundary(curve, t_a, t_b, rtol=1e-9):
    """Bisect for a hyperbolicity change between ``t_a`` and ``t_b``.

    Uses the sign of the discriminant when it differs at the two ends,
    otherwise the hyperbolicity flag itself. At most 80 iterations.
    """
    da = discriminant(curve.polynomial(t_a))
    db = discriminant(curve.polynomial(t_b))
    use_disc = np.sign(da) != np.sign(db) and da != 0 and db != 0
    if use_disc:
        side_a = np.sign(da)

        def side(t):
            return np.sign(discriminant(curve.polynomial(t))) == side_a

    else:
        side_a = _is_hyperbolic_at(curve, t_a)

        def side(t):
            return _is_hyperbolic_at(curve, t) == side_a

    a, b = float(t_a), float(t_b)
    for _ in range(BISECTION_MAX_ITER):
        if abs(b - a) <= rtol * max(1.0, abs(a), abs(b)):
            break
        mid = 0.5 * (a + b)
        if side(mid):
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def trace_curve(curve, t_min, t_max, steps):
    """Sample the curve on a uniform grid of ``steps`` points in ``t``.

    Hyperbolicity changes between neighbouring samples are refined by
    bisection and stored in ``CurveTrace.crossings``.
    """
    if steps < 2:
        raise ValueError("steps must be at least 2")
    ts = np.linspace(float(t_min), float(t_max), int(steps))
    samples = [_sample_at(curve, t) for t in ts]
    crossings = []
    for left, right in zip(samples, samples[1:]):
        if left.hyperbolic != right.hyperbolic:
            crossings.append(locate_boundary(curve, left.t, right.t))
    return CurveTrace(curve=curve, samples=samples, crossings=crossings)


# ---------------------------------------------------------------------------
# Collision and escape diagnostics
# ---------------------------------------------------------------------------


@dataclass
class CollisionFinding:
    """Approach to a node collision at the hyperbolicity boundary ``t_boundary``.

    ``offsets`` are the distances from the boundary (on the hyperbolic side);
    the colliding pair's amplitudes should grow like ``1 / gap``, so
    ``amplitude_gap_products`` stays bounded while ``max_abs_amplitudes``
    blows up.
    """

    t_boundary: float
    direction: int
    offsets: np.ndarray
    gaps: np.ndarray
    max_abs_amplitudes: np.ndarray
    amplitude_gap_products: np.ndarray
    monotone_blowup: bool


@dataclass
class EscapeFinding:
    direction: int
    t_values: np.ndarray
    nodes: np.ndarray
    growth_exponents: np.ndarray
    escaping: np.ndarray
    exactly_one_extreme: Optional[bool]


@dataclass
class CollisionReport:
    collisions: List[CollisionFinding]
    escapes: List[EscapeFinding]
    closest_approach_t: float
    closest_approach_gap: float


def approach_boundary(curve, t_boundary, offsets):
    """Nodes/amplitudes at ``t_boundary + direction * offset`` on the hyperbolic side."""
    offsets = np.asarray(offsets, dtype=float)
    direction = 1
    for probe in np.sort(offsets):
        up = _is_hyperbolic_at(curve, t_boundary + probe)
        down = _is_hyperbolic_at(curve, t_boundary - probe)
        if up != down:
            direction = 1 if up else -1
            break
    gaps, amax = [], []
    for off in offsets:
        t = t_boundary + direction * off
        s = _sample_at(curve, t)
        gaps.append(s.min_gap if s.hyperbolic else np.nan)
        amax.append(s.max_abs_amplitude if s.hyperbolic else np.nan)
    gaps = np.array(gaps)
    amax = np.array(amax)
    order = np.argsort(-offsets)  # far to near
    a_sorted = amax[order]
    monotone = bool(np.all(np.isfinite(a_sorted)) and np.all(np.diff(a_sorted) > 0))
    return CollisionFinding(
        t_boundary=float(t_boundary),
        direction=direction,
        offsets=offsets,
        gaps=gaps,
        max_abs_amplitudes=amax,
        amplitude_gap_products=amax * gaps,
        monotone_blowup=monotone,
    )


def _escape_at_end(trace, end):
    samples = trace.samples if end > 0 else trace.samples[::-1]
    run = []
    for s in reversed(samples):
        if not s.hyperbolic:
            break
        run.append(s)
    if len(run) < 2:
        return None
    far = run[0]
    t_far = abs(far.t)
    if t_far == 0:
        return None
    # sample in the run whose |t| is closest to t_far / 10
    near = min(run[1:], key=lambda s: abs(abs(s.t) - t_far / 10.0))
    if abs(near.t) == 0 or t_far / abs(near.t) < 5.0 or np.sign(near.t) != np.sign(far.t):
        return EscapeFinding(
            direction=int(np.sign(far.t)),
            t_values=np.array([near.t, far.t]),
            nodes=np.vstack([near.nodes, far.nodes]),
            growth_exponents=np.full(trace.curve.d, np.nan),
            escaping=np.zeros(trace.curve.d, dtype=bool),
            exactly_one_extreme=None,
        )
    ratio = np.log(t_far / abs(near.t))
    expo = np.log(np.abs(far.nodes) / np.maximum(np.abs(near.nodes), 1e-300)) / ratio
    escaping = expo >= 0.5
    idx = np.flatnonzero(escaping)
    one = bool(idx.size == 1 and idx[0] in (0, trace.curve.d - 1))
    return EscapeFinding(
        direction=int(np.sign(far.t)),
        t_values=np.array([near.t, far.t]),
        nodes=np.vstack([near.nodes, far.nodes]),
        growth_exponents=expo,
        escaping=escaping,
        exactly_one_extreme=one,
    )


def collision_diagnostics(trace, depths=range(2, 9)):
    """Node-collision and node-escape findings along a traced curve.

    Collisions: every hyperbolicity crossing is approached from the
    hyperbolic side at distances ``10**-k`` (``k`` in ``depths``, relative
    to ``max(1, |t*|)``), recording the min gap and max amplitude.

    Escapes: at each end of the trace that lies in a hyperbolic run
    spanning a factor >= 5 in ``|t|``, each node's growth exponent
    ``d log|x| / d log|t|`` is estimated; a node escapes when it is >= 0.5.
    """
    if not trace.samples:
        raise ValueError("empty trace")
    collisions = []
    for t_star in trace.crossings:
        offs = np.array([10.0 ** (-k) for k in depths]) * max(1.0, abs(t_star))
        collisions.append(approach_boundary(trace.curve, t_star, offs))
    escapes = [f for f in (_escape_at_end(trace, +1), _escape_at_end(trace, -1)) if f is not None]
    gaps = trace.min_gaps
    if np.any(np.isfinite(gaps)):
        i = int(np.nanargmin(gaps))
        closest = (trace.samples[i].t, float(gaps[i]))
    else:
        closest = (np.nan, np.nan)
    return CollisionReport(
        collisions=collisions,
        escapes=escapes,
        closest_approach_t=float(closest[0]),
        closest_approach_gap=float(closest[1]),
    )


# ---------------------------------------------------------------------------
# Curve-restricted estimation
# ---------------------------------------------------------------------------


@dataclass
class CurveEstimate:
    signal: core.SpikeSignal
    t: float
    residual: float
    t_range: tuple
    feasible_intervals: list


def real_projection_estimate(mu):
    """Baseline: project the roots of ``HM(mu)`` to the real line, then fit amplitudes."""
    m = core.as_moment_array(mu)
    roots = core.polynomial_roots(core.hankel_map(m)).roots
    nodes = np.sort(roots.real)
    # projected conjugate pairs coincide, so allow a rank-deficient fit
    V = np.power.outer(nodes, np.arange(m.size)).T
    a, *_ = np.linalg.lstsq(V, m, rcond=None)
    return core.SpikeSignal(a, nodes)


def _golden_section(f, a, b, tol):
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def curve_restricted_estimate(
    mu_noisy,
    *,
    t_range=None,
    eps=None,
    h=None,
    node_bounds=None,
    amplitude_bound=None,
    grid=401,
    full_output=False,
):
    """Nearest feasible signal on the Prony curve of the noisy moments.

    The curve is built from the first ``2d - 1`` noisy moments; ``t`` (the
    last moment) is scanned over ``t_range``, or over
    ``t0 +- 10 eps h**-(2d-1)`` when ``eps`` and ``h`` are given. A point is
    feasible when its polynomial is hyperbolic and the resulting signal
    respects ``node_bounds = (lo, hi)`` and ``max |a_j| <= amplitude_bound``.
    The max-norm moment residual to ``mu_noisy`` is minimised by grid search
    followed by golden-section refinement on each feasible interval, whose
    ends are first pushed to the feasibility boundary by bisection.

    Raises :class:`NoFeasiblePoint` if no scanned ``t`` is feasible.
    """
    m = core.as_moment_array(mu_noisy)
    d = m.size // 2
    curve = prony_curve(m[:-1])
    t0 = float(m[-1])
    if t_range is None:
        if eps is None or h is None:
            raise ValueError("give t_range, or eps and h to derive it")
        half = 10.0 * eps * (1.0 / h) ** (2 * d - 1)
        t_range = (t0 - half, t0 + half)
    lo, hi = map(float, t_range)

    cache = {}

    def signal_at(t):
        if t in cache:
            return cache[t]
        sig = curve.signal(t)
        if sig is not None:
            if node_bounds is not None and (
                sig.nodes[0] < node_bounds[0] or sig.nodes[-1] > node_bounds[1]
            ):
                sig = None
            elif amplitude_bound is not None and np.max(np.abs(sig.amplitudes)) > amplitude_bound:
                sig = None
        cache[t] = sig
        return sig

    def residual(t):
        sig = signal_at(t)
        if sig is None:
            return np.inf
        return float(np.max(np.abs(core.moments(sig, 2 * d) - m)))

    ts = np.linspace(lo, hi, int(grid))
    if lo <= t0 <= hi:
        ts = np.unique(np.append(ts, t0))
    feasible = np.array([signal_at(t) is not None for t in ts])
    if not feasible.any():
        raise NoFeasiblePoint(f"no feasible point on the curve for t in [{lo:g}, {hi:g}]")

    tol = 1e-12 * max(1.0, abs(lo), abs(hi))

    def push(inside, outside):
        a, b = inside, outside
        for _ in range(BISECTION_MAX_ITER):
            if abs(b - a) <= tol:
                break
            mid = 0.5 * (a + b)
            if signal_at(mid) is not None:
                a = mid
            else:
                b = mid
        return a

    intervals = []
    i = 0
    while i < ts.size:
        if not feasible[i]:
            i += 1
            continue
        j = i
        while j + 1 < ts.size and feasible[j + 1]:
            j += 1
        a = push(ts[i], ts[i - 1]) if i > 0 else ts[i]
        b = push(ts[j], ts[j + 1]) if j + 1 < ts.size else ts[j]
        intervals.append((float(a), float(b)))
        i = j + 1

    best_t, best_r = None, np.inf
    for a, b in intervals:
        candidates = [(a, residual(a)), (b, residual(b))]
        if b > a:
            candidates.append(_golden_section(residual, a, b, tol))
        inner = [t for t in ts if a <= t <= b]
        candidates.extend((t, residual(t)) for t in inner)
        for t, r in candidates:
            if r < best_r:
                best_t, best_r = float(t), r
    estimate = CurveEstimate(
        signal=signal_at(best_t),
        t=best_t,
        residual=best_r,
        t_range=(lo, hi),
        feasible_intervals=intervals,
    )
    return estimate if full_output else estimate.signal
