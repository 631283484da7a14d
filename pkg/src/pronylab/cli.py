"""Command-line front end: ``pronylab <command> --input JSON [options]``.

Input schemas (inline JSON, a path, or ``-`` for stdin)::

    solve          {"d": 2, "moments": [2, 0, 0.5, 0]}
    moments        {"amplitudes": [...], "nodes": [...], "count": 4}        count optional
    variety-trace  {"moments": [m_0, ..., m_{2d-2}], "t_min": -5, "t_max": 5, "steps": 201}
    error-scan     {"amplitudes": [...], "nodes": [...], "eps": 1e-3, "q": [2]}   q optional
    scaling        {"d": 2, "h_list": [0.1, 0.07, 0.05, 0.035, 0.025], "p": 3, "kappa": 0}
    quadrature     {"moments": [2, 0, 0.6666666666666666, 0]}
    expfit         {"samples": [y_0, ..., y_{2d-1}]}
    waring         {"coeffs": [b_0, ..., b_m]}

JSON results go to ``--output`` (stdout by default). ``variety-trace``,
``error-scan`` and ``scaling`` write CSV there and a JSON summary to
``--report`` when given.

Exit codes: 0 success (real solution), 2 complex solution, 3 no solution,
1 invalid input or I/O failure.
"""

import argparse
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import applications, core, error_geometry, io, varieties
from .exceptions import GenericityFailure, NotRealSolvable, PronyError, SolveFailed

EXIT_OK, EXIT_ERROR, EXIT_COMPLEX, EXIT_UNSOLVABLE = 0, 1, 2, 3


class InputError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    input: str
    output: Optional[str] = None
    report: Optional[str] = None
    seed: int = 0
    tol_rank: Optional[float] = None
    tol_real: float = core.TAU_REAL
    samples: int = 2000
    quiet: bool = False
    t_range: Optional[Sequence[float]] = None
    h_list: Optional[Sequence[float]] = None
    p: Optional[float] = None

    def __post_init__(self):
        if self.tol_rank is not None and not self.tol_rank > 0:
            raise InputError("--tol-rank must be positive")
        if not self.tol_real > 0:
            raise InputError("--tol-real must be positive")
        if self.samples < 1:
            raise InputError("--samples must be at least 1")
        if self.h_list is not None and np.any(np.diff(self.h_list) >= 0):
            raise InputError("h_list must be strictly decreasing")

    @property
    def solve_kw(self):
        return {"tol_rank": self.tol_rank, "tau_real": self.tol_real}


# ---------------------------------------------------------------------------
# helpers


def _field(data, name, kind=None):
    if not isinstance(data, dict) or name not in data:
        raise InputError(f"missing field {name!r}")
    value = data[name]
    if kind == "vector":
        try:
            arr = np.asarray(value, dtype=float)
        except (TypeError, ValueError):
            raise InputError(f"field {name!r} must be a list of numbers") from None
        if arr.ndim != 1 or arr.size == 0 or not np.all(np.isfinite(arr)):
            raise InputError(f"field {name!r} must be a non-empty list of finite numbers")
        return arr
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise InputError(f"field {name!r} must be an integer")
        return value
    if kind == "number":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise InputError(f"field {name!r} must be a number")
        return float(value)
    return value


def _signal(data):
    a = _field(data, "amplitudes", "vector")
    x = _field(data, "nodes", "vector")
    try:
        return core.SpikeSignal(a, x)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _numbers(v):
    if np.iscomplexobj(v):
        return [complex(z) if z.imag != 0 else float(z.real) for z in v]
    return [float(z) for z in v]


def _outcome_dict(out):
    res = {"status": out.status, "amplitudes": [], "nodes": [], "rank": int(out.rank)}
    eff = out.reduced_outcome if isinstance(out, core.RankDeficient) else out
    if isinstance(eff, core.RealSolution):
        res["amplitudes"], res["nodes"] = _numbers(eff.signal.amplitudes), _numbers(eff.signal.nodes)
    elif isinstance(eff, core.ComplexSolution):
        res["amplitudes"], res["nodes"] = _numbers(eff.amplitudes), _numbers(eff.nodes)
    res["condition"] = float(out.condition)
    res["residual"] = float(out.residual)
    if isinstance(out, core.Unsolvable):
        res["diagnostic"] = out.diagnostic
    return res


def _exit_for(out):
    eff = out.reduced_outcome if isinstance(out, core.RankDeficient) else out
    if isinstance(eff, core.RealSolution):
        return EXIT_OK
    if isinstance(eff, core.ComplexSolution):
        return EXIT_COMPLEX
    return EXIT_UNSOLVABLE


# ---------------------------------------------------------------------------
# commands


def cmd_solve(cfg, data):
    d = _field(data, "d", "int")
    m = _field(data, "moments", "vector")
    if d < 1 or m.size != 2 * d:
        raise InputError(f"expected 2d = {2 * d} moments, got {m.size}")
    out = core.prony_solve(m, **cfg.solve_kw)
    io.write_json(_outcome_dict(out), cfg.output)
    return _exit_for(out)


def cmd_moments(cfg, data):
    f = _signal(data)
    count = data.get("count", 2 * f.d)
    if isinstance(count, bool) or not isinstance(count, int) or count < 1:
        raise InputError("field 'count' must be a positive integer")
    io.write_json({"d": f.d, "moments": core.moments(f, count)}, cfg.output)
    return EXIT_OK


def cmd_variety_trace(cfg, data):
    mt = _field(data, "moments", "vector")
    if mt.size % 2 == 0:
        raise InputError("variety-trace needs 2d - 1 moments")
    t_min, t_max = cfg.t_range or (_field(data, "t_min", "number"), _field(data, "t_max", "number"))
    steps = int(data.get("steps", 201))
    if not t_min < t_max:
        raise InputError("need t_min < t_max")
    curve = varieties.prony_curve(mt, tol_rank=cfg.tol_rank)
    trace = varieties.trace_curve(curve, t_min, t_max, steps)
    d = curve.d
    header = (
        ["t"]
        + [f"c{i}" for i in range(d)]
        + [f"x{j + 1}" for j in range(d)]
        + [f"a{j + 1}" for j in range(d)]
        + ["hyperbolic", "min_gap", "max_abs_amplitude"]
    )
    rows = []
    for s in trace.samples:
        nodes = s.nodes if s.nodes is not None else np.full(d, np.nan)
        amps = s.amplitudes if s.amplitudes is not None else np.full(d, np.nan)
        rows.append([s.t, *s.coefficients, *nodes, *amps, s.hyperbolic, s.min_gap, s.max_abs_amplitude])
    io.write_csv(header, rows, cfg.output)
    if cfg.report:
        io.write_json(
            {
                "d": d,
                "slope": curve.slope,
                "intercept": curve.intercept,
                "crossings": trace.crossings,
                "affinity_residual": curve.affinity_residual,
            },
            cfg.report,
        )
    return EXIT_OK


def cmd_error_scan(cfg, data):
    f = _signal(data)
    eps = _field(data, "eps", "number")
    if not eps > 0:
        raise InputError("eps must be positive")
    qs = [int(q) for q in data.get("q", [])]
    for q in qs:
        if not f.d <= q <= 2 * f.d - 1:
            raise InputError(f"q must lie in [d, 2d-1], got {q}")
    rep = error_geometry.worst_case_errors(f, eps, cfg.samples, cfg.seed, delta_qs=qs)
    s = rep._samples
    d = f.d
    dA = np.max(np.abs(s.amplitudes - f.amplitudes), axis=1)
    dX = np.max(np.abs(s.nodes - f.nodes), axis=1)
    merr = np.max(np.abs(s.moment_errors), axis=1)
    dq = {q: error_geometry.delta_q_concentration(f, eps, s, q, full_output=True)[1] for q in qs}
    header = (
        ["sample"]
        + [f"a{j + 1}" for j in range(d)]
        + [f"x{j + 1}" for j in range(d)]
        + ["err_A", "err_X", "err", "moment_error"]
        + [f"dist_q{q}" for q in qs]
    )
    rows = [
        [i, *s.amplitudes[i], *s.nodes[i], dA[i], dX[i], max(dA[i], dX[i]), merr[i], *(dq[q][i] for q in qs)]
        for i in range(s.n)
    ]
    io.write_csv(header, rows, cfg.output)
    if cfg.report:
        summary = {k: v for k, v in vars(rep).items() if not k.startswith("_")}
        summary["delta_q_max_distance"] = {str(k): v for k, v in rep.delta_q_max_distance.items()}
        io.write_json(summary, cfg.report)
    return EXIT_OK


def cmd_scaling(cfg, data):
    d = _field(data, "d", "int")
    h_list = cfg.h_list if cfg.h_list is not None else list(_field(data, "h_list", "vector"))
    p = cfg.p if cfg.p is not None else _field(data, "p", "number")
    kappa = float(data.get("kappa", 0.0))
    if np.any(np.diff(h_list) >= 0):
        raise InputError("h_list must be strictly decreasing")
    try:
        res = error_geometry.scaling_experiment(d, h_list, p, n=cfg.samples, seed=cfg.seed, kappa=kappa)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    rows = zip(res.h, res.eps, res.rho, res.rho_A, res.rho_X)
    io.write_csv(["h", "eps", "rho", "rho_A", "rho_X"], rows, cfg.output)
    if cfg.report:
        io.write_json(
            {
                "d": d,
                "p": res.p,
                "kappa": kappa,
                "seed": res.seed,
                "samples": cfg.samples,
                "slope": res.slope,
                "slope_A": res.slope_A,
                "slope_X": res.slope_X,
                "expected": res.expected,
            },
            cfg.report,
        )
    return EXIT_OK


def cmd_quadrature(cfg, data):
    m = _field(data, "moments", "vector")
    if m.size % 2:
        raise InputError("need an even number of moments")
    try:
        q = applications.gauss_quadrature_from_moments(m, **cfg.solve_kw)
    except NotRealSolvable as exc:
        _diag(cfg, f"error: {exc}", force=True)
        return EXIT_UNSOLVABLE
    io.write_json({"nodes": q.nodes, "weights": q.weights, "exactness_degree": q.exactness_degree}, cfg.output)
    return EXIT_OK


def cmd_expfit(cfg, data):
    y = _field(data, "samples", "vector")
    if y.size % 2:
        raise InputError("need an even number of samples")
    try:
        fit = applications.exponential_fit(y, **cfg.solve_kw)
    except SolveFailed as exc:
        _diag(cfg, f"error: {exc}", force=True)
        return EXIT_UNSOLVABLE
    io.write_json(
        {
            "amplitudes": _numbers(fit.amplitudes),
            "nodes": _numbers(fit.nodes),
            "exponents": list(fit.exponents),
            "residual": fit.residual,
        },
        cfg.output,
    )
    return EXIT_OK if np.isrealobj(fit.nodes) else EXIT_COMPLEX


def cmd_waring(cfg, data):
    b = _field(data, "coeffs", "vector")
    try:
        dec = applications.waring_decompose(b, **cfg.solve_kw)
    except GenericityFailure as exc:
        _diag(cfg, f"error: {exc}", force=True)
        return EXIT_UNSOLVABLE
    except ValueError as exc:
        raise InputError(str(exc)) from None
    io.write_json(
        {
            "m": dec.m,
            "eta": _numbers(dec.eta),
            "xi": _numbers(dec.xi),
            "zeta": _numbers(dec.zeta),
            "residual": dec.residual,
        },
        cfg.output,
    )
    return EXIT_OK if np.isrealobj(dec.xi) else EXIT_COMPLEX


COMMANDS = {
    "solve": cmd_solve,
    "moments": cmd_moments,
    "variety-trace": cmd_variety_trace,
    "error-scan": cmd_error_scan,
    "scaling": cmd_scaling,
    "quadrature": cmd_quadrature,
    "expfit": cmd_expfit,
    "waring": cmd_waring,
}


# ---------------------------------------------------------------------------


def _diag(cfg, msg, force=False):
    if force or not cfg.quiet:
        print(msg, file=sys.stderr)


def build_parser():
    parser = argparse.ArgumentParser(prog="pronylab", description="Prony systems: solving, varieties, error geometry.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--input", "-i", required=True, help="inline JSON, a JSON file, or - for stdin")
        p.add_argument("--output", "-o", help="output file (default stdout)")
        p.add_argument("--report", help="JSON summary file for CSV-producing commands")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol-rank", type=float)
        p.add_argument("--tol-real", type=float, default=core.TAU_REAL)
        p.add_argument("--samples", type=int, default=2000)
        p.add_argument("--quiet", "-q", action="store_true")
        p.add_argument("--t-range", type=float, nargs=2, metavar=("T_MIN", "T_MAX"))
        p.add_argument("--h-list", type=float, nargs="+")
        p.add_argument("--p", type=float)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(
            command=args.command,
            input=args.input,
            output=args.output,
            report=args.report,
            seed=args.seed,
            tol_rank=args.tol_rank,
            tol_real=args.tol_real,
            samples=args.samples,
            quiet=args.quiet,
            t_range=args.t_range,
            h_list=args.h_list,
            p=args.p,
        )
        data = io.parse_input(cfg.input)
        return COMMANDS[cfg.command](cfg, data)
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except PronyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSOLVABLE


if __name__ == "__main__":
    sys.exit(main())
