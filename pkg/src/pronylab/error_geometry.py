"""Error amplification for clustered nodes.

A signal ``F`` whose nodes span ``[kappa - h, kappa + h]`` is mapped to its
*model signal* ``G`` by ``x -> (x - kappa) / h``; amplitudes are unchanged.
Moments transform by a triangular binomial matrix, so the error set

    E_eps(F) = {F' : |m_k(F') - m_k(F)| <= eps, k < 2d}

becomes, in model coordinates, a set squeezed between the "parallelepipeds"

    Pi_{eps, alpha}(G) = {G' : |m_k(G') - m_k(G)| <= eps * alpha**k}

with ``Pi_{eps', 1/h}(G) <= E <= Pi_{eps, 1/h'}(G)``, ``h' = h / (1+|kappa|)``,
``eps' = eps (1+|kappa|)**(1-2d)`` (equality for ``kappa = 0``).

This module samples error sets, checks that sandwich, measures how close
the samples stay to Prony varieties, and fits the worst-case error
exponents ``rho_X ~ eps h**(2-2d)`` and ``rho_A, rho ~ eps h**(1-2d)``.
All distances use the max norm.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb
from typing import Dict, NamedTuple, Optional

import numpy as np

from . import core
from .exceptions import DegenerateCluster

#: samples whose recomputed moment error exceeds eps by more than this
#: relative amount are rejected from the error set
VERIFY_RTOL = 1e-6
#: floating-point slack applied to parallelepiped bounds
BOUND_RTOL = 1e-9
#: perturbations are generated in chunks, each chunk with its own stream
#: derived from (seed, chunk index)
CHUNK = 1024
#: default cap eps <= SAFETY * h'**(2d-1) standing in for the unknown radius R
SAFETY = 0.1
#: local refinement of the distance to a Prony curve: points per zoom, zooms
ZOOM_POINTS = 33
ZOOM_LEVELS = 4


def _n_threads():
    try:
        return max(1, int(os.environ.get("PRONYLAB_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# Model space
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClusterGeometry:
    h: float
    kappa: float

    @property
    def degenerate(self):
        return self.h <= 0.0

    @property
    def h_prime(self):
        return self.h / (1.0 + abs(self.kappa))

    def eps_prime(self, eps, d):
        return eps * (1.0 + abs(self.kappa)) ** (1 - 2 * d)


def cluster_geometry(signal):
    """Half-length ``h`` and centre ``kappa`` of the node interval."""
    x = signal.nodes
    if x.size == 1:
        return ClusterGeometry(h=0.0, kappa=float(x[0]))
    return ClusterGeometry(h=0.5 * float(x[-1] - x[0]), kappa=0.5 * float(x[0] + x[-1]))


def _check(geom):
    if geom.degenerate:
        raise DegenerateCluster("cluster has h = 0; the model signal is undefined")


def normalize(signal, geometry=None):
    """Model signal ``G`` of ``signal`` and the geometry used.

    Passing ``geometry`` maps ``signal`` with someone else's ``(kappa, h)``,
    which is how error-set members are brought to the model space of ``F``.
    """
    geom = cluster_geometry(signal) if geometry is None else geometry
    _check(geom)
    return core.SpikeSignal(signal.amplitudes, (signal.nodes - geom.kappa) / geom.h), geom


def denormalize(model, geometry):
    _check(geometry)
    return core.SpikeSignal(model.amplitudes, geometry.kappa + geometry.h * model.nodes)


def model_moments(signal, count, geometry=None):
    """Moments of the model signal."""
    g, _ = normalize(signal, geometry)
    return core.moments(g, count)


def moment_transform(geometry, count):
    """Matrix ``T`` with ``model_moments = T @ moments`` for this geometry."""
    _check(geometry)
    h, kappa = geometry.h, geometry.kappa
    T = np.zeros((count, count))
    for k in range(count):
        for i in range(k + 1):
            T[k, i] = comb(k, i) * (-kappa) ** (k - i) / h**k
    return T


def inverse_moment_transform(geometry, count):
    """Matrix mapping model moments back to raw moments."""
    _check(geometry)
    h, kappa = geometry.h, geometry.kappa
    T = np.zeros((count, count))
    for k in range(count):
        for i in range(k + 1):
            T[k, i] = comb(k, i) * kappa ** (k - i) * h**i
    return T


def moment_distance(g1, g2):
    """Moment metric ``max_k |m_k(g1) - m_k(g2)|`` over ``k < 2d``."""
    n = 2 * g1.d
    return float(np.max(np.abs(core.moments(g1, n) - core.moments(g2, n))))


def pi_membership(g_prime, g, eps, alpha, rtol=0.0):
    """Whether ``|m_k(G') - m_k(G)| <= eps * alpha**k`` for all ``k < 2d``.

    The parallelepiped is closed; ``rtol`` widens it for rounding.
    """
    if eps <= 0 or alpha <= 0:
        raise ValueError("eps and alpha must be positive")
    n = 2 * g.d
    diff = np.abs(core.moments(g_prime, n) - core.moments(g, n))
    bound = eps * alpha ** np.arange(n)
    return bool(np.all(diff <= bound * (1.0 + rtol)))


# ---------------------------------------------------------------------------
# Regular signals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegularityParams:
    """Node gaps ``>= eta`` in ``[-1, 1]`` and ``m_lo <= |a_j| <= m_hi``."""

    eta: float
    m_lo: float
    m_hi: float

    def validate(self, d):
        if d > 1 and not 0 < self.eta <= 2.0 / (d - 1):
            raise ValueError(f"eta must lie in (0, 2/(d-1)] = (0, {2.0 / (d - 1):g}]")
        if not 0 < self.m_lo < self.m_hi:
            raise ValueError("need 0 < m_lo < m_hi")
        return self

    def is_regular(self, signal, atol=1e-12):
        x, a = signal.nodes, np.abs(signal.amplitudes)
        if np.any(np.abs(x) > 1 + atol):
            return False
        if x.size > 1 and np.min(np.diff(x)) < self.eta - atol:
            return False
        return bool(np.all(a >= self.m_lo - atol) and np.all(a <= self.m_hi + atol))


def random_regular_signal(d, params, rng, signs=False):
    """Random (eta, m_lo, m_hi)-regular model signal.

    Nodes: sorted uniform offsets in the slack ``2 - (d-1) eta`` plus the
    mandatory gaps. With ``signs`` the amplitude signs are random too.
    """
    params.validate(d)
    slack = 2.0 - (d - 1) * params.eta
    u = np.sort(rng.uniform(0.0, slack, size=d))
    nodes = -1.0 + u + params.eta * np.arange(d)
    amps = rng.uniform(params.m_lo, params.m_hi, size=d)
    if signs:
        amps *= rng.choice([-1.0, 1.0], size=d)
    return core.SpikeSignal(amps, nodes)


def regular_cluster(d, h, kappa=0.0, amplitudes=None):
    """Cluster with equispaced model nodes on [-1, 1] scaled to half-length h."""
    a = np.ones(d) if amplitudes is None else np.asarray(amplitudes, dtype=float)
    model = np.linspace(-1.0, 1.0, d) if d > 1 else np.zeros(1)
    return core.SpikeSignal(a, kappa + h * model)


# ---------------------------------------------------------------------------
# Error-set sampling
# ---------------------------------------------------------------------------


def _corners(dim):
    idx = np.arange(2**dim)[:, None]
    bits = (idx >> np.arange(dim)[None, :]) & 1
    return 2.0 * bits - 1.0


def _chunk_unit_perturbations(dim, size, seed, chunk):
    rng = np.random.default_rng([seed, chunk])
    out = rng.uniform(-1.0, 1.0, size=(size, dim))
    kind = rng.integers(0, 3, size=size)  # 0 interior, 1 face, 2 corner
    signs = rng.choice([-1.0, 1.0], size=(size, dim))
    face_axis = rng.integers(0, dim, size=size)
    faces = np.flatnonzero(kind == 1)
    out[faces, face_axis[faces]] = signs[faces, face_axis[faces]]
    corners = kind == 2
    out[corners] = signs[corners]
    return out


def unit_perturbations(dim, n, seed):
    """``n`` points of the cube ``[-1, 1]**dim``: corners, faces and interior.

    When ``n >= 2**dim`` every corner is included first; the rest is an
    even mixture of uniform interior points, random points on a random face
    and random corners, generated in chunks of ``CHUNK`` with streams seeded
    by ``(seed, chunk index)``.
    """
    n = int(n)
    parts = []
    if n >= 2**dim:
        parts.append(_corners(dim))
    rest = n - sum(p.shape[0] for p in parts)
    sizes = [min(CHUNK, rest - s) for s in range(0, rest, CHUNK)]

    def job(c):
        return _chunk_unit_perturbations(dim, sizes[c], seed, c)

    if _n_threads() > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=_n_threads()) as ex:
            parts.extend(ex.map(job, range(len(sizes))))
    else:
        parts.extend(job(c) for c in range(len(sizes)))
    if not parts:
        return np.zeros((0, dim))
    return np.vstack(parts)


@dataclass
class ErrorSetSample:
    """Real members of ``E_eps(F)`` obtained from sampled moment perturbations.

    Rows of ``amplitudes``/``nodes`` are the kept solutions; ``perturbations``
    are the raw moment perturbations that produced them and
    ``moment_errors`` their recomputed moment deviations.
    """

    signal: core.SpikeSignal
    eps: float
    seed: int
    n_requested: int
    amplitudes: np.ndarray
    nodes: np.ndarray
    perturbations: np.ndarray
    moment_errors: np.ndarray
    n_not_real: int
    n_rejected: int

    @property
    def n(self):
        return self.nodes.shape[0]

    @property
    def discard_fraction(self):
        return 0.0 if self.n_requested == 0 else 1.0 - self.n / self.n_requested

    @property
    def signals(self):
        return [core.SpikeSignal(a, x) for a, x in zip(self.amplitudes, self.nodes)]

    def __len__(self):
        return self.n

    def __iter__(self):
        return iter(self.signals)


def solve_perturbed(signal, deltas, geometry=None):
    """Solve the Prony system at ``moments(signal) + delta`` for each row.

    The solve runs in the model frame of ``signal`` (moments are moved
    with the exact binomial transform), which is far better conditioned
    for clustered nodes; solutions are mapped back to raw coordinates.
    Returns ``(amplitudes, nodes, real_mask)`` in raw coordinates.
    """
    d = signal.d
    n2 = 2 * d
    deltas = np.atleast_2d(np.asarray(deltas, dtype=float))
    geom = cluster_geometry(signal) if geometry is None else geometry
    if d > 1 and not geom.degenerate:
        g, _ = normalize(signal, geom)
        T = moment_transform(geom, n2)
        base = core.moments(g, n2)
        batch = core.solve_many(base + deltas @ T.T)
        nodes = geom.kappa + geom.h * batch.nodes
    else:
        base = core.moments(signal, n2)
        batch = core.solve_many(base + deltas)
        nodes = batch.nodes
    return batch.amplitudes, nodes, batch.real


def _draw(signal, eps, n, seed):
    d = signal.d
    n2 = 2 * d
    deltas = eps * unit_perturbations(n2, n, seed)
    empty = np.zeros((0, d))
    if deltas.shape[0] == 0:
        return ErrorSetSample(signal, eps, seed, 0, empty, empty, np.zeros((0, n2)), np.zeros((0, n2)), 0, 0)
    amps, nodes, real = solve_perturbed(signal, deltas)
    mu = core.moments(signal, n2)
    errs = core.moments_many(amps[real], nodes[real], n2) - mu
    ok = np.max(np.abs(errs), axis=1) <= eps * (1.0 + VERIFY_RTOL)
    keep = np.flatnonzero(real)[ok]
    return ErrorSetSample(
        signal=signal,
        eps=float(eps),
        seed=int(seed),
        n_requested=int(deltas.shape[0]),
        amplitudes=amps[keep],
        nodes=nodes[keep],
        perturbations=deltas[keep],
        moment_errors=errs[ok],
        n_not_real=int(np.sum(~real)),
        n_rejected=int(np.sum(~ok)),
    )


def _top_up(draw, n, max_factor):
    """Call ``draw(m)`` with growing ``m`` until it yields ``n`` results."""
    m = n
    out = draw(m)
    while out.n < n and m < max_factor * n:
        rate = max(out.n, 1) / m
        m = min(int(max_factor * n), int(np.ceil(1.1 * n / rate)) + 1)
        out = draw(m)
    return out


def sample_error_set(signal, eps, n, seed=0, *, min_kept=False, max_factor=64):
    """Sample ``n`` moment perturbations in the closed eps-cube and solve them.

    Complex/unsolvable outcomes are discarded, and so is any real solution
    whose recomputed moments miss the cube by more than ``VERIFY_RTOL``
    relative; both counts are recorded. With ``min_kept`` more perturbations
    are drawn (deterministically, up to ``max_factor * n``) until ``n``
    samples survive; the result then holds exactly ``n`` of them.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not min_kept or n == 0:
        return _draw(signal, eps, n, seed)
    out = _top_up(lambda m: _draw(signal, eps, m, seed), n, max_factor)
    k = min(n, out.n)
    out.amplitudes, out.nodes = out.amplitudes[:k], out.nodes[:k]
    out.perturbations, out.moment_errors = out.perturbations[:k], out.moment_errors[:k]
    return out


# ---------------------------------------------------------------------------
# Sandwich check
# ---------------------------------------------------------------------------


class SandwichResult(NamedTuple):
    inner_violations: int
    outer_violations: int
    n_samples: int
    n_probes: int
    kappa_zero_mismatches: Optional[int] = None
    n_equivalence_probes: int = 0


def _model_stack(amps, nodes, geom, n2):
    xbar = (nodes - geom.kappa) / geom.h
    return core.moments_many(amps, xbar, n2), core.moments_many(np.abs(amps), np.abs(xbar), n2)


def _rounding(abs_moments):
    return 64 * core.EPS * abs_moments


def sandwich_check(signal, eps, samples, n_probes=1000, seed=0, rtol=BOUND_RTOL):
    """Check ``Pi_{eps',1/h}(G) <= E_eps(F) <= Pi_{eps,1/h'}(G)``.

    Outer containment: each sample ``F'`` (an :class:`ErrorSetSample`) is
    mapped to model space with ``F``'s geometry and tested against
    ``Pi_{e,1/h'}(G)``, ``e`` being its own recomputed moment error level.

    Inner containment: model perturbations inside ``Pi_{eps',1/h}(G)`` are
    drawn until ``n_probes`` of them have real solutions; those are mapped
    back and tested for membership of ``E_eps(F)`` at their own level.

    For ``kappa = 0`` both memberships are additionally compared on
    ``n_probes`` real probes straddling the boundary; they must agree.
    Bounds carry a relative slack ``rtol`` plus a rounding term.
    """
    d = signal.d
    n2 = 2 * d
    geom = cluster_geometry(signal)
    g, _ = normalize(signal, geom)
    mu = core.moments(signal, n2)
    mg = core.moments(g, n2)
    k = np.arange(n2)

    # outer
    outer = 0
    n_samples = samples.n
    if n_samples:
        level = np.max(np.abs(samples.moment_errors), axis=1)
        dm, dm_abs = _model_stack(samples.amplitudes, samples.nodes, geom, n2)
        bound = level[:, None] * (1.0 / geom.h_prime) ** k
        excess = np.abs(dm - mg) - bound * (1.0 + rtol) - _rounding(dm_abs + np.abs(mg))
        outer = int(np.sum(np.any(excess > 0, axis=1)))

    # inner
    eps_p = geom.eps_prime(eps, d)
    widths = eps_p * (1.0 / geom.h) ** k
    a_p, xbar_p = _real_probes(mg, widths, n_probes, seed + 1)
    x_p = geom.kappa + geom.h * xbar_p
    inner = 0
    if a_p.shape[0]:
        model_level = np.max(np.abs(core.moments_many(a_p, xbar_p, n2) - mg) / widths, axis=1) * eps_p
        raw = core.moments_many(a_p, x_p, n2)
        raw_abs = core.moments_many(np.abs(a_p), np.abs(x_p), n2)
        allowed = model_level * (1.0 + abs(geom.kappa)) ** (2 * d - 1)
        excess = np.abs(raw - mu) - allowed[:, None] * (1.0 + rtol) - _rounding(raw_abs + np.abs(mu))
        inner = int(np.sum(np.any(excess > 0, axis=1)))

    mismatches = None
    n_eq = 0
    if geom.kappa == 0.0:
        mismatches, n_eq = _kappa_zero_equivalence(signal, g, geom, eps, n_probes, seed + 2, rtol)
    return SandwichResult(inner, outer, n_samples, int(a_p.shape[0]), mismatches, n_eq)


class _Probes(NamedTuple):
    amplitudes: np.ndarray
    nodes: np.ndarray

    @property
    def n(self):
        return self.amplitudes.shape[0]


def _real_probes(base, widths, n, seed, levels=None, max_factor=64):
    """``n`` real solutions at ``base + widths * u``, ``u`` in the unit cube."""

    def draw(m):
        u = unit_perturbations(base.size, m, seed)
        if levels is not None:
            # a three-word key keeps this stream apart from the chunk streams
            u = u * np.random.default_rng([seed, 0, 1]).uniform(*levels, size=(m, 1))
        b = core.solve_many(base + u * widths)
        return _Probes(b.amplitudes[b.real], b.nodes[b.real])

    p = _top_up(draw, n, max_factor) if n else _Probes(np.zeros((0, base.size // 2)), np.zeros((0, base.size // 2)))
    return p.amplitudes[:n], p.nodes[:n]


def _kappa_zero_equivalence(signal, g, geom, eps, n_probes, seed, rtol):
    n2 = 2 * signal.d
    k = np.arange(n2)
    widths = eps * (1.0 / geom.h) ** k
    mg = core.moments(g, n2)
    # levels in [0.5, 1.5] put roughly half the probes outside
    a_p, xbar_p = _real_probes(mg, widths, n_probes, seed, levels=(0.5, 1.5))
    in_pi = np.all(np.abs(core.moments_many(a_p, xbar_p, n2) - mg) <= widths * (1 + rtol), axis=1)
    raw = core.moments_many(a_p, geom.h * xbar_p, n2)
    in_e = np.all(np.abs(raw - core.moments(signal, n2)) <= eps * (1 + rtol), axis=1)
    return int(np.sum(in_pi != in_e)), int(a_p.shape[0])


# ---------------------------------------------------------------------------
# Worst-case errors
# ---------------------------------------------------------------------------


@dataclass
class ErrorScanReport:
    epsilon: float
    h: float
    kappa: float
    seed: int
    n_requested: int
    n_samples: int
    rho: float
    rho_A: float
    rho_X: float
    discard_fraction: float
    sandwich_inner_violations: Optional[int] = None
    sandwich_outer_violations: Optional[int] = None
    delta_q_max_distance: Dict[int, float] = field(default_factory=dict)


def _errors(signal, amps, nodes):
    dA = np.max(np.abs(amps - signal.amplitudes), axis=1)
    dX = np.max(np.abs(nodes - signal.nodes), axis=1)
    return dA, dX, np.maximum(dA, dX)


def _evaluate(signal, deltas, eps):
    amps, nodes, real = solve_perturbed(signal, deltas)
    out = np.full((3, deltas.shape[0]), -np.inf)
    if real.any():
        n2 = 2 * signal.d
        errs = core.moments_many(amps[real], nodes[real], n2) - core.moments(signal, n2)
        ok = np.max(np.abs(errs), axis=1) <= eps * (1.0 + VERIFY_RTOL)
        vals = np.vstack(_errors(signal, amps[real], nodes[real]))
        vals[:, ~ok] = -np.inf
        out[:, real] = vals
    return out


def _coordinate_ascent(signal, eps, start, which, sweeps=2):
    levels = eps * np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
    delta = start.copy()
    best = _evaluate(signal, delta[None, :], eps)[which, 0]
    for _ in range(sweeps):
        improved = False
        for k in range(delta.size):
            cand = np.repeat(delta[None, :], levels.size, axis=0)
            cand[:, k] = levels
            vals = _evaluate(signal, cand, eps)[which]
            i = int(np.argmax(vals))
            if vals[i] > best:
                best, delta = vals[i], cand[i]
                improved = True
        if not improved:
            break
    return best


def worst_case_errors(signal, eps, n, seed=0, *, refine=True, top=5, sandwich=True, delta_qs=()):
    """Estimate ``rho``, ``rho_A`` and ``rho_X`` for ``signal`` at noise ``eps``.

    Maxima over a sampled error set (all cube corners included once
    ``n >= 2**(2d)``), followed by coordinate ascent in moment space from
    the ``top`` best samples of each quantity. Optionally fills the
    sandwich counts and Delta_q distances of the report.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    samples = sample_error_set(signal, eps, n, seed)
    geom = cluster_geometry(signal)
    rhos = [0.0, 0.0, 0.0]
    if samples.n:
        vals = _errors(signal, samples.amplitudes, samples.nodes)
        for j in range(3):
            rhos[j] = float(np.max(vals[j]))
            if refine:
                for i in np.argsort(-vals[j])[:top]:
                    rhos[j] = max(rhos[j], _coordinate_ascent(signal, eps, samples.perturbations[i], j))
    report = ErrorScanReport(
        epsilon=float(eps),
        h=geom.h,
        kappa=geom.kappa,
        seed=int(seed),
        n_requested=samples.n_requested,
        n_samples=samples.n,
        rho_A=rhos[0],
        rho_X=rhos[1],
        rho=max(rhos),
        discard_fraction=samples.discard_fraction,
    )
    if sandwich and not geom.degenerate:
        res = sandwich_check(signal, eps, samples, n_probes=min(int(n), 1000), seed=seed)
        report.sandwich_inner_violations = res.inner_violations
        report.sandwich_outer_violations = res.outer_violations
    for q in delta_qs:
        report.delta_q_max_distance[int(q)] = delta_q_concentration(signal, eps, samples, q)
    report._samples = samples
    return report


# ---------------------------------------------------------------------------
# Concentration near Prony varieties
# ---------------------------------------------------------------------------


def _model_distances(a1, x1, a2, x2):
    # (n, d) vs (m, d) -> (n, m)
    dA = np.max(np.abs(a1[:, None, :] - a2[None, :, :]), axis=2)
    dX = np.max(np.abs(x1[:, None, :] - x2[None, :, :]), axis=2)
    return np.maximum(dA, dX)


def delta_q_concentration(signal, eps, samples, q, grid=257, refine=True, full_output=False):
    """Max model-space distance from error-set samples to the variety part.

    The part ``S_{q, eps, 1/h'}(G)`` keeps ``m_0 .. m_q`` of the model signal
    ``G`` and lets ``m_k`` (``k > q``) move by at most ``eps h'**-k``. It is
    sampled on a grid over those free moments; for ``q = 2d - 2`` (a curve)
    each sample's nearest grid point is refined by repeated local zooms.
    """
    d = signal.d
    n2 = 2 * d
    if not d <= q <= n2 - 1:
        raise ValueError(f"need d <= q <= 2d-1, got q={q}")
    geom = cluster_geometry(signal)
    g, _ = normalize(signal, geom)
    if samples.n == 0:
        return (0.0, np.zeros(0)) if full_output else 0.0
    a_s = samples.amplitudes
    x_s = (samples.nodes - geom.kappa) / geom.h
    if q == n2 - 1:
        dist = _model_distances(a_s, x_s, g.amplitudes[None, :], g.nodes[None, :])[:, 0]
        return (float(dist.max()), dist) if full_output else float(dist.max())

    mg = core.moments(g, n2)
    alpha = 1.0 / geom.h_prime
    free_k = np.arange(q + 1, n2)
    half = eps * alpha**free_k
    n_free = free_k.size
    per_dim = grid if n_free == 1 else max(3, int(round(grid ** (1.0 / n_free))))
    axes = [np.linspace(mg[k] - w, mg[k] + w, per_dim) for k, w in zip(free_k, half)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n_free)
    mus = np.hstack([np.repeat(mg[None, : q + 1], mesh.shape[0], axis=0), mesh])
    batch = core.solve_many(mus)
    ok = batch.real
    if not ok.any():
        raise RuntimeError("no real signal found on the sampled variety part")
    pa, px = batch.amplitudes[ok], batch.nodes[ok]
    D = _model_distances(a_s, x_s, pa, px)
    j = np.argmin(D, axis=1)
    dist = D[np.arange(D.shape[0]), j]

    if refine and n_free == 1:
        # batched zoom around each sample's best grid point
        ts = mesh[ok, 0]
        t_best = ts[j]
        lo_t, hi_t = mg[-1] - half[0], mg[-1] + half[0]
        step = (hi_t - lo_t) / (per_dim - 1)
        offsets = np.linspace(-1.0, 1.0, ZOOM_POINTS)
        fixed = mg[: q + 1]
        for _ in range(ZOOM_LEVELS):
            cand = np.clip(t_best[:, None] + step * offsets, lo_t, hi_t)
            rows = np.hstack([np.broadcast_to(fixed, (cand.size, q + 1)), cand.reshape(-1, 1)])
            b = core.solve_many(rows)
            da = np.max(np.abs(b.amplitudes.reshape(cand.shape + (d,)) - a_s[:, None, :]), axis=2)
            dx = np.max(np.abs(b.nodes.reshape(cand.shape + (d,)) - x_s[:, None, :]), axis=2)
            dd = np.where(b.real.reshape(cand.shape), np.maximum(da, dx), np.inf)
            k = np.argmin(dd, axis=1)
            better = dd[np.arange(k.size), k] < dist
            dist = np.where(better, dd[np.arange(k.size), k], dist)
            t_best = np.where(better, cand[np.arange(k.size), k], t_best)
            step *= 2.0 / (ZOOM_POINTS - 1)
    out = float(dist.max())
    return (out, dist) if full_output else out


# ---------------------------------------------------------------------------
# Scaling experiment and bi-Lipschitz sanity
# ---------------------------------------------------------------------------


@dataclass
class ScalingResult:
    d: int
    p: float
    seed: int
    h: np.ndarray
    eps: np.ndarray
    rho: np.ndarray
    rho_A: np.ndarray
    rho_X: np.ndarray
    slope: float
    slope_A: float
    slope_X: float
    expected: Dict[str, float]


def fit_slope(h, eps, rho):
    """Least-squares slope of ``log(rho / eps)`` against ``log(1/h)``."""
    x = np.log(1.0 / np.asarray(h))
    y = np.log(np.asarray(rho) / np.asarray(eps))
    return float(np.polyfit(x, y, 1)[0])


def scaling_experiment(d, h_list, p, n=2000, seed=0, kappa=0.0, refine=True):
    """Worst-case errors of the equispaced unit-amplitude cluster, ``eps = h**p``.

    Returns the fitted exponents of ``rho / eps`` in ``1/h``; the predicted
    values are ``2d - 2`` for nodes and ``2d - 1`` for amplitudes and the
    full signal (``0`` for ``d = 1``, where nothing clusters).
    """
    h = np.asarray(h_list, dtype=float)
    if h.size < 4 or np.any(np.diff(h) >= 0):
        raise ValueError("h_list needs at least 4 strictly decreasing values")
    if p < 2 * d - 1:
        raise ValueError(f"need p >= 2d - 1 = {2 * d - 1}")
    eps = h**p
    rho, rho_a, rho_x = [], [], []
    for hi, ei in zip(h, eps):
        F = regular_cluster(d, hi, kappa) if d > 1 else core.SpikeSignal([1.0], [kappa])
        rep = worst_case_errors(F, ei, n, seed, refine=refine, sandwich=False)
        rho.append(rep.rho)
        rho_a.append(rep.rho_A)
        rho_x.append(rep.rho_X)
    rho, rho_a, rho_x = map(np.array, (rho, rho_a, rho_x))
    if d == 1:
        expected = {"slope": 0.0, "slope_A": 0.0, "slope_X": 0.0}
    else:
        expected = {"slope": 2.0 * d - 1, "slope_A": 2.0 * d - 1, "slope_X": 2.0 * d - 2}
    return ScalingResult(
        d=d,
        p=float(p),
        seed=int(seed),
        h=h,
        eps=eps,
        rho=rho,
        rho_A=rho_a,
        rho_X=rho_x,
        slope=fit_slope(h, eps, rho),
        slope_A=fit_slope(h, eps, rho_a),
        slope_X=fit_slope(h, eps, rho_x),
        expected=expected,
    )


def bilipschitz_ratios(model, radius, n_pairs=500, seed=0):
    """Ratios ``||G'' - G'|| / d(G', G'')`` for pairs in the moment cube of ``radius``.

    Both members of each pair are reconstructed from moments of ``model``
    perturbed inside ``[-radius, radius]**(2d)``.
    """
    d = model.d
    n2 = 2 * d
    rng = np.random.default_rng([seed, 1])
    base = core.moments(model, n2)
    d1 = rng.uniform(-radius, radius, size=(n_pairs, n2))
    d2 = rng.uniform(-radius, radius, size=(n_pairs, n2))
    b1 = core.solve_many(base + d1)
    b2 = core.solve_many(base + d2)
    ok = b1.real & b2.real
    a1, x1, a2, x2 = b1.amplitudes[ok], b1.nodes[ok], b2.amplitudes[ok], b2.nodes[ok]
    sig = np.maximum(np.max(np.abs(a1 - a2), axis=1), np.max(np.abs(x1 - x2), axis=1))
    mom = np.max(np.abs(core.moments_many(a1, x1, n2) - core.moments_many(a2, x2, n2)), axis=1)
    keep = mom > 0
    return sig[keep] / mom[keep]
