"""Command-line front end.

Exit codes: 0 success, 1 certified infeasible (or a failed check),
2 numerical failure, 3 usage or parse error.
"""

from __future__ import annotations

import argparse
import os
import shlex
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .contraction import (
    BRACKET_CAP, DEFAULT_EPS, DEFAULT_TOL, InfeasibleError, MetricCertificate, SearchError,
    SolverOptions, find_metric, max_rate, nominal_uncertainty_range, optimize_box,
    optimize_symmetric_range, polytope_inner_approx,
)
from .polyalg import PolySyntaxError
from .simulate import (
    build_unidirectional_coupling, integrate, parameter_scan, phase_svg, sync_distance,
)
from .sysdef import SystemFileError, data_path, load_definition
from .verify import (
    DEFAULT_GRID, DEFAULT_SAMPLES, DEFAULT_SEED, Region, format_report, lyapunov_check,
    sample_eigen_bounds, write_csv,
)

EXIT_OK, EXIT_INFEASIBLE, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- helpers -----------------------------------------------------------------------

def _header(args) -> list:
    return [f"contractsos {__version__}", f"command = {args.command_line}", f"seed = {getattr(args, 'seed', DEFAULT_SEED)}"]


def _load(name: str):
    """A path, or the name of a bundled definition such as ``jet``."""
    if os.path.exists(name):
        return load_definition(name)
    try:
        return load_definition(data_path(name))
    except FileNotFoundError:
        raise UsageError(f"no such system file or bundled system: {name!r}") from None


def _sets(items) -> dict:
    out = {}
    for it in items or ():
        name, sep, val = it.partition("=")
        if not sep:
            raise UsageError(f"--set expects name=value, got {it!r}")
        try:
            out[name.strip()] = float(val)
        except ValueError:
            raise UsageError(f"--set value for {name!r} is not a number") from None
    return out


def _floats(text: str, what: str) -> list:
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"{what}: expected numbers, got {text!r}") from None


def _names(text: str | None) -> list | None:
    if text is None:
        return None
    return [t for t in text.replace(",", " ").split() if t]


def _pairs(text: str | None) -> list:
    """``"1,2;2,2"`` (1-based) -> [(0, 1), (1, 1)]."""
    if not text:
        return []
    out = []
    for chunk in text.replace(" ", "").split(";"):
        a, sep, b = chunk.partition(",")
        if not sep or not a.isdigit() or not b.isdigit() or int(a) < 1 or int(b) < 1:
            raise UsageError(f"--zero-r-entries expects i,j;... with 1-based indices, got {chunk!r}")
        out.append((int(a) - 1, int(b) - 1))
    return out


def _opts(args) -> SolverOptions:
    return SolverOptions(tol=args.solver_tol, max_iter=args.max_iter)


def _emit(args, lines: list):
    text = "\n".join(["format = 1", *[f"# {h}" for h in _header(args)], *lines]) + "\n"
    if getattr(args, "report", None):
        Path(args.report).write_text(text)
    sys.stdout.write(text)


def _kv(d: dict) -> list:
    return [f"{k} = {v}" for k, v in d.items()]


def _trace_lines(trace) -> list:
    return [f"probe = {float(p.value)!r} {'feasible' if p.feasible else 'infeasible'} {p.status}"
            + (" retried" if p.retried else "") for p in trace]


def _cert_out(args, stem: str) -> str:
    return args.output or f"{stem}.cert"


def _check_params(system, params: dict):
    for k in params:
        try:
            system.param(k)
        except KeyError:
            raise UsageError(f"system has no parameter {k!r}") from None


def _save_cert(args, cert: MetricCertificate, stem: str) -> str:
    path = _cert_out(args, stem)
    cert.save(path, _header(args))
    return path


def _diag_lines(cert: MetricCertificate) -> list:
    return [f"solver.{k} = {v}" for k, v in cert.diagnostics.items()]


# -- subcommands -----------------------------------------------------------------

def cmd_metric(args) -> int:
    d = _load(args.system)
    s, params = d.system, _sets(args.set)
    _check_params(s, params)
    cert = find_metric(s, args.degree, args.beta, args.eps, structure_vars=_names(args.structure_vars),
                       semi=args.semi, zero_entries=_pairs(args.zero_r_entries), params=params or None,
                       opts=_opts(args))
    path = _save_cert(args, cert, f"{Path(args.system).stem}_d{args.degree}")
    _emit(args, ["result = feasible", f"system = {s.name}", f"degree = {args.degree}",
                 f"beta = {float(args.beta)!r}", f"eps = {float(args.eps)!r}", f"semi = {int(args.semi)}",
                 f"certificate = {path}", *_diag_lines(cert)])
    return EXIT_OK


def cmd_rate(args) -> int:
    d = _load(args.system)
    params = _sets(args.set)
    _check_params(d.system, params)
    res = max_rate(d.system, args.degree, args.tol, args.eps, opts=_opts(args), params=params or None)
    path = _save_cert(args, res.certificate, f"{Path(args.system).stem}_d{args.degree}_rate")
    _emit(args, ["result = feasible", f"system = {d.system.name}", f"degree = {args.degree}",
                 f"tol = {float(args.tol)!r}", f"beta_star = {float(res.beta)!r}", f"certificate = {path}",
                 *_trace_lines(res.trace)])
    return EXIT_OK


def _uncertainty_lines(res) -> list:
    return ["result = feasible", *_kv(res.summary()), *_trace_lines(res.trace)]


def cmd_urange(args) -> int:
    d = _load(args.system)
    cert = MetricCertificate.load(args.cert)
    res = nominal_uncertainty_range(d.system, cert, args.param, args.tol, args.cap, _opts(args))
    _emit(args, [f"system = {d.system.name}", f"certificate = {args.cert}", *_uncertainty_lines(res)])
    return EXIT_OK


def cmd_uopt(args) -> int:
    d = _load(args.system)
    names = _names(args.param) or [p.name for p in d.system.params]
    params = _sets(args.set)
    _check_params(d.system, params)
    kw = dict(opts=_opts(args), params=params or None)
    if args.box:
        if len(names) != 2:
            raise UsageError("--box needs exactly two parameters")
        res = optimize_box(d.system, args.degree, names, args.tol, args.eps, args.cap, **kw)
    else:
        if len(names) != 1:
            raise UsageError("symmetric range needs exactly one parameter (use --param)")
        res = optimize_symmetric_range(d.system, args.degree, names[0], args.tol, args.eps, args.cap, **kw)
    lines = [f"system = {d.system.name}", f"degree = {args.degree}", *_uncertainty_lines(res)]
    if res.certificate is not None:
        path = _save_cert(args, res.certificate, f"{Path(args.system).stem}_d{args.degree}_{res.kind}")
        lines.append(f"certificate = {path}")
    _emit(args, lines)
    return EXIT_OK


def cmd_upoly(args) -> int:
    d = _load(args.system)
    cert = MetricCertificate.load(args.cert)
    names = _names(args.params) or [p.name for p in d.system.params]
    if len(names) != 2:
        raise UsageError("polytope search needs exactly two parameters")
    res = polytope_inner_approx(d.system, cert, names, args.tol, args.cap, _opts(args))
    _emit(args, [f"system = {d.system.name}", f"certificate = {args.cert}", *_uncertainty_lines(res)])
    return EXIT_OK


def cmd_verify(args) -> int:
    d = _load(args.system)
    cert = MetricCertificate.load(args.cert)
    names = cert.M.names
    if tuple(names) != tuple(d.system.space):
        raise UsageError(f"certificate variables {' '.join(names)} do not match system "
                         f"variables {' '.join(d.system.space)}")
    kw = dict(grid=args.grid, samples=args.samples, seed=args.seed)
    region = Region.parse(names, args.region, **kw) if args.region else Region.box(names, **kw)
    bounds = sample_eigen_bounds(cert, region)
    lyap = None
    if not d.system.inputs:
        lyap = lyapunov_check(d.system, cert, region)
    text = format_report(cert, region, bounds, lyap, _header(args))
    if args.report:
        Path(args.report).write_text(text)
    sys.stdout.write(text)
    if args.csv:
        write_csv(args.csv, region, bounds, _header(args))
    ok = bounds.passes(cert.eps, cert.semi) and (lyap is None or cert.semi or lyap.passes())
    return EXIT_OK if ok else EXIT_INFEASIBLE


def _x0_list(args, d) -> list:
    if args.x0:
        return [_floats(x, "--x0") for x in args.x0]
    if d.initial_states():
        return d.initial_states()
    raise UsageError("no --x0 given and the system file lists no default initial state")


def _write_traj(args, traj, k: int, total: int):
    suffix = lambda p: p if total == 1 else str(Path(p).with_suffix("")) + f"_{k + 1}" + Path(p).suffix  # noqa: E731
    if args.csv:
        traj.to_csv(suffix(args.csv), every=args.every, header=_header(args))
    if args.svg:
        Path(suffix(args.svg)).write_text(phase_svg(traj, header=_header(args)))


def cmd_simulate(args) -> int:
    d = _load(args.system)
    s, params = d.system, _sets(args.set)
    _check_params(s, params)
    if s.inputs:
        raise UsageError("system has external inputs and cannot be simulated on its own")
    x0s = _x0_list(args, d)
    lines = [f"system = {s.name}", f"t_end = {float(args.t_end)!r}", f"dt = {float(args.dt)!r}",
             *[f"param.{k} = {float(v)!r}" for k, v in sorted(s.param_values(params).items())]]
    if args.scan:
        pname, _, vals = args.scan.partition("=")
        _check_params(s, {pname: 0})
        values = _floats(vals, "--scan")
        base = s.with_nominal(**params) if params else s
        rows = parameter_scan(base, pname, values, x0s[0], args.t_end, args.dt, args.window,
                              args.settle_tol, jobs=args.jobs)
        lines.append(f"scan = {pname}")
        for v, settled, drift, amp, blew in rows:
            lines.append(f"point = {float(v)!r} settled={int(settled)} drift={float(drift)!r} amplitude={float(amp)!r} blew_up={int(blew)}")
        _emit(args, lines)
        return EXIT_OK
    for k, x0 in enumerate(x0s):
        if len(x0) != s.n:
            raise UsageError(f"--x0 needs {s.n} values")
        traj = integrate(s, x0, args.t_end, args.dt, params or None)
        _write_traj(args, traj, k, len(x0s))
        lines += [f"x0 = {' '.join(repr(v) for v in x0)}",
                  f"final = {' '.join(repr(float(v)) for v in traj.final)}",
                  f"blew_up = {int(traj.blew_up)}"]
    _emit(args, lines)
    return EXIT_OK


def cmd_couple(args) -> int:
    s = build_unidirectional_coupling(args.alpha, args.omega, args.k, args.eta)
    x0 = _floats(args.x0[0], "--x0") if args.x0 else [1.0, 0.0, -1.0, 0.5]
    if len(x0) != 4:
        raise UsageError("--x0 needs 4 values (x1 x2 y1 y2)")
    traj = integrate(s, x0, args.t_end, args.dt)
    _write_traj(args, traj, 0, 1)
    dist = sync_distance(traj)
    half = traj.times >= traj.times[-1] / 2
    _emit(args, [f"system = {s.name}", f"x0 = {' '.join(repr(v) for v in x0)}",
                 f"t_end = {float(args.t_end)!r}", f"dt = {float(args.dt)!r}", f"blew_up = {int(traj.blew_up)}",
                 f"sync_distance_final = {float(dist[-1])!r}",
                 f"sync_distance_min_second_half = {float(dist[half].min())!r}",
                 f"sync_distance_max_second_half = {float(dist[half].max())!r}"])
    return EXIT_OK


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="contractsos", description="Contraction metrics for polynomial systems via SOS programming.")
    p.add_argument("--version", action="version", version=f"contractsos {__version__}")
    p.add_argument("--jobs", type=int, default=1, help="maximum worker processes (default 1)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, system=True, solver=True):
        if system:
            sp.add_argument("system", help="system definition file or bundled name (e.g. jet)")
        if solver:
            sp.add_argument("--solver-tol", type=float, default=1e-8, help="SDP tolerance (default 1e-8)")
            sp.add_argument("--max-iter", type=int, default=100, help="SDP iteration cap (default 100)")
        sp.add_argument("--report", help="also write the report to this file")

    def search(sp):
        sp.add_argument("--degree", type=int, required=True, help="even metric degree")
        sp.add_argument("--eps", type=float, default=DEFAULT_EPS, help="strictness margin (default 1e-4)")
        sp.add_argument("--set", action="append", metavar="NAME=VALUE", help="override a parameter's nominal value")
        sp.add_argument("-o", "--output", help="certificate file to write")

    sp = sub.add_parser("metric", help="search for a contraction metric")
    common(sp)
    search(sp)
    sp.add_argument("--beta", type=float, default=0.0, help="required convergence rate (default 0)")
    sp.add_argument("--semi", action="store_true", help="semi-contraction: -R only positive semidefinite")
    sp.add_argument("--structure-vars", help="comma list of variables the metric may depend on")
    sp.add_argument("--zero-r-entries", help="pin entries of R to zero, e.g. '1,2;2,2' (1-based)")
    sp.set_defaults(func=cmd_metric)

    sp = sub.add_parser("rate", help="maximise the convergence rate by bisection")
    common(sp)
    search(sp)
    sp.add_argument("--tol", type=float, default=DEFAULT_TOL, help="bisection tolerance (default 1e-3)")
    sp.set_defaults(func=cmd_rate)

    sp = sub.add_parser("urange", help="parameter range certified by a fixed metric")
    common(sp)
    sp.add_argument("--cert", required=True, help="certificate from `metric`")
    sp.add_argument("--param", required=True)
    sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
    sp.add_argument("--cap", type=float, default=BRACKET_CAP)
    sp.set_defaults(func=cmd_urange)

    sp = sub.add_parser("uopt", help="largest symmetric interval (or box) with a jointly optimised metric")
    common(sp)
    search(sp)
    sp.add_argument("--param", help="parameter name; with --box a comma list of two")
    sp.add_argument("--box", action="store_true", help="two parameters, square box")
    sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
    sp.add_argument("--cap", type=float, default=BRACKET_CAP)
    sp.set_defaults(func=cmd_uopt)

    sp = sub.add_parser("upoly", help="polytope of two parameters certified by a fixed metric")
    common(sp)
    sp.add_argument("--cert", required=True)
    sp.add_argument("--params", help="comma list of two parameter names")
    sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
    sp.add_argument("--cap", type=float, default=BRACKET_CAP)
    sp.set_defaults(func=cmd_upoly)

    sp = sub.add_parser("verify", help="sample a certificate over a region")
    common(sp, solver=False)
    sp.add_argument("--cert", required=True)
    sp.add_argument("--region", help="bound b for [-b, b] on every axis, or --region=lo:hi[,lo:hi...] (default 2)")
    sp.add_argument("--grid", type=int, default=DEFAULT_GRID)
    sp.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--csv", help="write per-point eigenvalues")
    sp.set_defaults(func=cmd_verify)

    def traj_opts(sp):
        sp.add_argument("--x0", action="append", help="initial state, e.g. '0.5 0.5' (repeatable)")
        sp.add_argument("--t-end", type=float, default=100.0)
        sp.add_argument("--dt", type=float, default=1e-3)
        sp.add_argument("--csv", help="trajectory CSV")
        sp.add_argument("--every", type=int, default=1, help="CSV down-sampling factor")
        sp.add_argument("--svg", help="phase portrait of the first two states")

    sp = sub.add_parser("simulate", help="integrate a system with RK4")
    common(sp, solver=False)
    traj_opts(sp)
    sp.add_argument("--set", action="append", metavar="NAME=VALUE")
    sp.add_argument("--scan", metavar="NAME=V1,V2,...", help="settle check for each parameter value")
    sp.add_argument("--window", type=float, default=10.0, help="settle window (default 10)")
    sp.add_argument("--settle-tol", type=float, default=1e-3)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("couple", help="simulate two unidirectionally coupled Van der Pol oscillators")
    common(sp, system=False, solver=False)
    traj_opts(sp)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--omega", type=float, default=1.0)
    sp.add_argument("--k", type=float, default=-1.0)
    sp.add_argument("--eta", type=float, default=1.5)
    sp.set_defaults(func=cmd_couple)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    args.command_line = "contractsos " + shlex.join(argv)
    if args.jobs < 1:
        print("contractsos: error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except InfeasibleError as e:
        r = e.report
        _emit(args, ["result = infeasible", f"status = {r.status}", f"feasibility_ratio = {float(r.feasibility_ratio)!r}",
                     f"pinf = {r.pinf}", f"dinf = {r.dinf}", f"numerr = {r.numerr}", f"retried = {int(r.retried)}",
                     f"message = {e}"])
        return EXIT_INFEASIBLE
    except SearchError as e:
        r = e.report
        _emit(args, ["result = numerical-failure", f"status = {r.status}",
                     f"feasibility_ratio = {float(r.feasibility_ratio)!r}", f"numerr = {r.numerr}",
                     f"retried = {int(r.retried)}", f"message = {e}"])
        return EXIT_NUMERICAL
    except (UsageError, SystemFileError, PolySyntaxError, KeyError, ValueError, OSError) as e:
        print(f"contractsos: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (np.linalg.LinAlgError, FloatingPointError) as e:
        print(f"contractsos: numerical error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
