"""Contraction-metric search and the robustness workflows built on it."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import sosprog
from .polyalg import PolyMatrix, Polynomial, field_function, rate_matrix
from .sdpsolve import SdpSolution, Settings, Status, solve
from .sosprog import DEFAULT_EPS, LinExpr, ParamPolyMatrix, SosProgram

# Literature bound on the additive jet perturbation used as a comparison
# point for the certified ranges; not recomputed here.
WANG_MICHEL_BOUND = 5.1e-3

BRACKET_START = 0.5
BRACKET_CAP = 64.0
RATE_START = 1.0
DEFAULT_TOL = 1e-3


@dataclass(frozen=True)
class Param:
    name: str
    nominal: float
    lower: float | None = None
    upper: float | None = None


class DynSystem:
    """Polynomial vector field with affine uncertain parameters.

    ``field`` lives in the space ``states + inputs + params``. Inputs are
    exogenous signals entering the last ``n - input_split`` equations.
    """

    def __init__(self, states: Sequence[str], field: Sequence[Polynomial],
                 params: Sequence[Param] = (), inputs: Sequence[str] = (),
                 input_split: int | None = None, name: str = "system",
                 constants: dict | None = None):
        self.states = tuple(states)
        self.inputs = tuple(inputs)
        self.params = tuple(params)
        self.name = name
        self.constants = dict(constants or {})
        self.input_split = input_split
        self.names = self.states + self.inputs + tuple(p.name for p in self.params)
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate symbol names")
        self.field = tuple(f if f.names == self.names else f.embed(self.names) for f in field)
        if len(self.field) != len(self.states):
            raise ValueError(f"{len(self.field)} equations for {len(self.states)} states")
        self._check_affine()
        self._check_inputs()

    def _check_affine(self):
        p0 = len(self.states) + len(self.inputs)
        for k, f in enumerate(self.field):
            for m in f.terms:
                if sum(m[p0:]) > 1:
                    bad = [self.names[i] for i in range(p0, len(m)) if m[i]]
                    raise NonAffineParameter(
                        f"equation {k + 1} is not affine in parameter(s) {', '.join(bad)}")

    def _check_inputs(self):
        if not self.inputs:
            return
        n = len(self.states)
        split = self.input_split if self.input_split is not None else 0
        if not 0 <= split <= n:
            raise ValueError("input split outside the state range")
        idx = range(n, n + len(self.inputs))
        for k, f in enumerate(self.field[:split]):
            if any(m[i] for m in f.terms for i in idx):
                raise ValueError(f"equation {k + 1} depends on an input but lies above the split")

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def space(self) -> tuple:
        """Variables of the SOS problems: states followed by inputs."""
        return self.states + self.inputs

    def param(self, name: str) -> Param:
        for p in self.params:
            if p.name == name:
                return p
        raise KeyError(f"unknown parameter {name!r}")

    def param_values(self, values: dict | None = None) -> dict:
        out = {p.name: p.nominal for p in self.params}
        for k, v in (values or {}).items():
            self.param(k)
            out[k] = float(v)
        return out

    def with_nominal(self, **values) -> "DynSystem":
        ps = [replace(p, nominal=float(values[p.name])) if p.name in values else p for p in self.params]
        for k in values:
            self.param(k)
        return DynSystem(self.states, self.field, ps, self.inputs, self.input_split, self.name, self.constants)

    def field_at(self, values: dict | None = None) -> list:
        """Field over :attr:`space` with parameters fixed (nominal unless overridden)."""
        vals = self.param_values(values)
        return [f.restrict(self.space, vals).to_float() for f in self.field]

    def affine_parts(self, names: Sequence[str], values: dict | None = None):
        """``f(delta) = f_nom + sum_k (delta_k - nom_k) * g_k``; returns (f_nom, [g_k])."""
        vals = self.param_values(values)
        f_nom = self.field_at(vals)
        gs = []
        for nm in names:
            self.param(nm)
            i = self.names.index(nm)
            g = []
            for f in self.field:
                df = f.differentiate(i)
                g.append(df.restrict(self.space, vals).to_float())
            gs.append(g)
        return f_nom, gs

    def function(self, values: dict | None = None) -> Callable:
        """Fast numeric evaluator ``x -> f(x)`` of an autonomous system."""
        if self.inputs:
            raise ValueError("system has external inputs; bind them before simulating")
        return field_function(self.field_at(values))

    def __repr__(self):
        return f"DynSystem({self.name!r}, states={self.states}, params={[p.name for p in self.params]})"


class NonAffineParameter(ValueError):
    pass


@dataclass
class MetricCertificate:
    M: PolyMatrix
    R: PolyMatrix
    grams: dict
    eps: float
    beta: float
    degree: int
    semi: bool = False
    diagnostics: dict = field(default_factory=dict)
    system: str = ""
    params: dict = field(default_factory=dict)

    @property
    def states(self):
        return self.M.names

    def recompute_R(self, sys: DynSystem) -> PolyMatrix:
        return rate_matrix(self.M, sys.field_at(self.params), self.beta)

    def self_consistency(self, sys: DynSystem) -> float:
        """Max coefficient mismatch between stored R and R recomputed from M."""
        R2 = self.recompute_R(sys)
        worst = 0.0
        for a, b in zip(self.R.entries, R2.entries):
            for p, q in zip(a, b):
                d = p - q
                worst = max([worst] + [abs(c) for c in d.terms.values()])
        return worst

    def scaled(self, c: float) -> "MetricCertificate":
        """Metric and certificates multiplied by ``c > 0`` (the feasible set is a cone)."""
        return MetricCertificate(self.M.scale(c), self.R.scale(c),
                                 {k: g.scaled(c) for k, g in self.grams.items()},
                                 self.eps * c, self.beta, self.degree, self.semi,
                                 dict(self.diagnostics), self.system, dict(self.params))

    def metadata(self) -> dict:
        return {
            "system": self.system, "states": list(self.states), "degree": self.degree,
            "eps": self.eps, "beta": self.beta, "semi": int(self.semi),
            **{f"param.{k}": v for k, v in sorted(self.params.items())},
            **{f"solver.{k}": v for k, v in self.diagnostics.items()},
        }

    def _matrices(self) -> dict:
        # targets of auxiliary Gram blocks (anchors, corner constraints) ride along
        mats = {"M": self.M, "R": self.R}
        for name, g in self.grams.items():
            if name not in ("M", "R"):
                mats[f"T_{name}"] = g.target.to_float()
        return mats

    def dumps(self, header=()) -> str:
        return sosprog.dumps_certificate(self.metadata(), self._matrices(), self.grams, header)

    def save(self, path, header=()):
        with open(path, "w") as fh:
            fh.write(self.dumps(header))

    @classmethod
    def load(cls, path) -> "MetricCertificate":
        with open(path) as fh:
            return cls.loads(fh.read())

    @classmethod
    def loads(cls, text: str) -> "MetricCertificate":
        meta, mats, grams = sosprog.loads_certificate(text)
        gc = {}
        for name, g in grams.items():
            if f"T_{name}" in mats:
                target = mats[f"T_{name}"]
            else:
                target = mats["M"] if name == "M" else -mats["R"]
            gc[name] = sosprog.GramCertificate(g["basis"], g["gram"], target.to_float(), g["eps"], name)
        params = {k[6:]: float(v) for k, v in meta.items() if k.startswith("param.")}
        diag = {k[7:]: v for k, v in meta.items() if k.startswith("solver.")}
        return cls(mats["M"], mats["R"], gc, float(meta.get("eps", 0.0)),
                   float(meta.get("beta", 0.0)), int(meta.get("degree", 0)),
                   bool(int(meta.get("semi", 0))), diag, meta.get("system", ""), params)


@dataclass
class SearchReport:
    """Outcome of a single SOS search that did not produce a certificate."""

    status: Status
    feasibility_ratio: float
    pinf: int
    dinf: int
    numerr: int
    iterations: int
    message: str = ""
    retried: bool = False

    @classmethod
    def from_solution(cls, sol: SdpSolution, retried=False, message=""):
        return cls(sol.status, sol.feasibility_ratio, sol.pinf, sol.dinf, sol.numerr,
                   sol.iterations, message or sol.message, retried)


class SearchError(RuntimeError):
    def __init__(self, report: SearchReport, what: str = "search"):
        self.report = report
        super().__init__(f"{what}: {report.status} (feasibility ratio {report.feasibility_ratio:+.3f})")


class InfeasibleError(SearchError):
    """Certified infeasible: the solver returned an infeasibility certificate."""


class NumericalError(SearchError):
    """Solver failed to converge to a conclusion."""


@dataclass
class SolverOptions:
    tol: float = 1e-8
    max_iter: int = 100
    prune: bool = True
    trace_weight: float = 1.0
    center_factor: float = 10.0


def _solve_program(prog: SosProgram, opts: SolverOptions):
    """Compile and solve; an Inaccurate result is retried once at tol x 10.

    Feasibility programs are first solved with a small trace objective
    (robust status); a feasible answer is then re-centred by solving the
    plain feasibility problem on the slice ``trace <= center_factor * t*``.
    """
    tw = opts.trace_weight if prog.objective is None else 0.0
    sdp = sosprog.compile(prog, prune=opts.prune, trace_weight=tw)
    sol = solve(sdp, tol=opts.tol, max_iter=opts.max_iter)
    retried = False
    if sol.status == Status.INACCURATE:
        retried = True
        sol = solve(sdp, tol=opts.tol * 10, max_iter=opts.max_iter)
    if sol.status == Status.FEASIBLE and tw and opts.center_factor:
        t_star = sum(float(np.trace(X)) for X in sol.blocks)
        sliced = sosprog.trace_slice(sdp, opts.center_factor * max(t_star, opts.tol))
        cen = solve(sliced, tol=opts.tol, max_iter=opts.max_iter)
        if cen.status == Status.FEASIBLE:
            cen.blocks = cen.blocks[:-1]
            cen.dual_blocks = cen.dual_blocks[:-1]
            return sdp, cen, retried
    return sdp, sol, retried


def _raise_for(sol: SdpSolution, retried: bool, what: str):
    rep = SearchReport.from_solution(sol, retried)
    if sol.status in (Status.PRIMAL_INFEASIBLE,):
        raise InfeasibleError(rep, what)
    raise NumericalError(rep, what)


def _diagnostics(sol: SdpSolution, retried: bool) -> dict:
    return {
        "status": str(sol.status), "feasibility_ratio": round(float(sol.feasibility_ratio), 6),
        "pinf": sol.pinf, "dinf": sol.dinf, "numerr": sol.numerr, "iterations": sol.iterations,
        "retried": int(retried),
    }


def _metric_program(sys: DynSystem, degree: int, structure_vars=None, name="M"):
    prog = SosProgram()
    M = sosprog.metric_template(prog, sys.space, degree, structure_vars, n=sys.n, name=name)
    return prog, M


def _tidy(M: PolyMatrix, rel: float = 1e-12) -> PolyMatrix:
    """Drop roundoff-level coefficients (below ``rel`` times the largest)."""
    big = max((abs(c) for r in M.entries for p in r for c in p.terms.values()), default=0.0)
    cut = rel * big
    return M.map(lambda p: Polynomial(p.names, {m: c for m, c in p.terms.items() if abs(c) > cut}),
                 symmetric=M.symmetric)


def _constant_part(M: ParamPolyMatrix) -> ParamPolyMatrix:
    zero = (0,) * len(M.names)
    ents = [[Polynomial(p.names, {zero: p.terms[zero]} if zero in p.terms else {}) for p in r]
            for r in M.entries]
    return ParamPolyMatrix(ents, symmetric=True)


def _rate_template(M: ParamPolyMatrix, fld, beta: float) -> ParamPolyMatrix:
    return ParamPolyMatrix.wrap(rate_matrix(M, fld, beta))


def find_metric(sys: DynSystem, degree: int, beta: float = 0.0, eps: float = DEFAULT_EPS,
                structure_vars: Sequence[str] | None = None, semi: bool = False,
                zero_entries: Sequence[tuple] = (), presolve: bool | None = None,
                params: dict | None = None, opts: SolverOptions | None = None) -> MetricCertificate:
    """Search for M with M - eps I and -R - eps I SOS matrices.

    In semi mode the -R constraint has eps = 0. ``zero_entries`` pins the
    listed (0-based) entries of R to zero; by default presolve runs whenever
    pins are present.
    """
    opts = opts or SolverOptions()
    if beta < 0:
        raise ValueError("beta must be non-negative")
    fld = sys.field_at(params)
    prog, M = _metric_program(sys, degree, structure_vars)
    R = _rate_template(M, fld, beta)
    prog.templates["R"] = R
    if semi:
        # M SOS, anchored by M(0) - eps I >= 0 so that M = 0 is excluded
        sosprog.sos_matrix_constraint(prog, M, 0.0, "M")
        sosprog.sos_matrix_constraint(prog, _constant_part(M), eps, "M0")
    else:
        sosprog.sos_matrix_constraint(prog, M, eps, "M")
    for i, j in zero_entries:
        sosprog.pin_zero(prog, R, i, j)
    sosprog.sos_matrix_constraint(prog, -R, 0.0 if semi else eps, "R")
    if presolve if presolve is not None else bool(zero_entries):
        try:
            prog = sosprog.presolve(prog)
        except sosprog.PresolveInfeasible as e:
            raise InfeasibleError(SearchReport(Status.PRIMAL_INFEASIBLE, -1.0, 1, 0, 0, 0, str(e)),
                                  f"metric search at degree {degree}") from e
    sdp, sol, retried = _solve_program(prog, opts)
    if sol.status != Status.FEASIBLE:
        _raise_for(sol, retried, f"metric search at degree {degree}")
    temps, grams = sosprog.recover(prog, sdp, sol)
    Mc = _tidy(temps["M"].to_float())
    Rc = rate_matrix(Mc, fld, beta)
    return MetricCertificate(Mc, Rc, grams, eps, beta, degree, semi, _diagnostics(sol, retried),
                             sys.name, sys.param_values(params))


# -- bisection machinery ---------------------------------------------------------

@dataclass
class Probe:
    value: float
    feasible: bool
    status: str
    retried: bool = False


def _try(fn, value):
    """Run one probe -> (certificate or None, Probe)."""
    try:
        cert = fn(value)
        st = cert.diagnostics.get("status", "Feasible") if hasattr(cert, "diagnostics") else "Feasible"
        return cert, Probe(value, True, st, bool(getattr(cert, "diagnostics", {}).get("retried", 0)))
    except SearchError as e:
        return None, Probe(value, False, str(e.report.status), e.report.retried)


def bisect_up(fn, lo: float, lo_cert, start: float, cap: float, tol: float, trace: list):
    """Largest feasible value above ``lo`` (feasible).

    Brackets by doubling the step from ``start`` until infeasible or the cap is
    reached, then bisects to width ``tol``. Returns (value, cert, capped).
    """
    step = start
    best, best_cert = lo, lo_cert
    hi = None
    while True:
        v = min(lo + step, lo + cap) if cap is not None else lo + step
        cert, pr = _try(fn, v)
        trace.append(pr)
        if cert is None:
            hi = v
            break
        best, best_cert = v, cert
        if step >= cap:
            return best, best_cert, True
        step = min(step * 2, cap)
    lo_v = best
    while hi - lo_v > tol:
        mid = 0.5 * (lo_v + hi)
        cert, pr = _try(fn, mid)
        trace.append(pr)
        if cert is None:
            hi = mid
        else:
            lo_v, best_cert = mid, cert
    return lo_v, best_cert, False


@dataclass
class RateResult:
    beta: float
    certificate: MetricCertificate
    trace: list


def max_rate(sys: DynSystem, degree: int, tol: float = DEFAULT_TOL, eps: float = DEFAULT_EPS,
             cap: float = BRACKET_CAP, opts: SolverOptions | None = None, **kw) -> RateResult:
    """Largest beta with a metric satisfying R + beta M <= -eps I (bisection)."""
    base = find_metric(sys, degree, 0.0, eps, opts=opts, **kw)
    trace = [Probe(0.0, True, base.diagnostics["status"])]
    fn = lambda b: find_metric(sys, degree, b, eps, opts=opts, **kw)  # noqa: E731
    # beta_hi doubles from RATE_START: probes 1, 2, 4, ...
    best, cert = 0.0, base
    hi = RATE_START
    while True:
        c, pr = _try(fn, hi)
        trace.append(pr)
        if c is None:
            break
        best, cert = hi, c
        if hi >= cap:
            return RateResult(best, cert, trace)
        hi = min(hi * 2, cap)
    lo = best
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        c, pr = _try(fn, mid)
        trace.append(pr)
        if c is None:
            hi = mid
        else:
            lo, cert = mid, c
    return RateResult(lo, cert, trace)


# -- uncertainty ---------------------------------------------------------------

@dataclass
class UncertaintyResult:
    kind: str                    # asymmetric-range | symmetric-interval | box | polytope
    values: object
    certificate: MetricCertificate | None
    trace: list
    params: tuple = ()
    nominal: tuple = ()
    capped: tuple = ()
    certificates: dict = field(default_factory=dict)

    def summary(self) -> dict:
        out = {"kind": self.kind, "params": " ".join(self.params)}
        if self.kind == "asymmetric-range":
            out["lower"], out["upper"] = self.values
        elif self.kind in ("symmetric-interval", "box"):
            out["gamma"] = self.values
            if self.kind == "symmetric-interval":
                nom = self.nominal[0]
                out["lower"], out["upper"] = nom - self.values, nom + self.values
        else:
            for k, v in enumerate(self.values):
                out[f"vertex{k + 1}"] = " ".join(f"{c:.6g}" for c in v)
        if self.capped:
            out["capped"] = " ".join(str(int(c)) for c in self.capped)
        return out


def _rate_split(M: PolyMatrix, f_nom, gs, beta):
    R0 = rate_matrix(M, f_nom, beta)
    Rs = [rate_matrix(M, g, 0.0) for g in gs]
    return R0, Rs


def _fixed_metric_check(M: PolyMatrix, R0, Rs, shifts, eps, opts):
    """Feasibility of -R(delta) - eps I SOS with M fixed."""
    R = R0
    for s, Rk in zip(shifts, Rs):
        if s:
            R = R + Rk.scale(float(s))
    prog = SosProgram()
    sosprog.sos_matrix_constraint(prog, -R, eps, "R")
    sdp, sol, retried = _solve_program(prog, opts)
    if sol.status != Status.FEASIBLE:
        _raise_for(sol, retried, "fixed-metric probe")
    _, grams = sosprog.recover(prog, sdp, sol)
    return R, grams, sol, retried


def _check_nominal(sys, cert, names, opts):
    f_nom, gs = sys.affine_parts(names, cert.params or None)
    R0, Rs = _rate_split(cert.M, f_nom, gs, cert.beta)
    try:
        _fixed_metric_check(cert.M, R0, Rs, [0.0] * len(Rs), cert.eps, opts)
    except SearchError as e:
        raise ValueError(f"certificate does not hold at the nominal parameters ({e})") from e
    return R0, Rs


def _fixed_probe_fn(sys, cert, R0, Rs, direction, opts, nominal):
    def fn(step):
        shifts = [step * d for d in direction]
        R, grams, sol, retried = _fixed_metric_check(cert.M, R0, Rs, shifts, cert.eps, opts)
        vals = dict(cert.params)
        for nm, nom, s in zip(nominal[0], nominal[1], shifts):
            vals[nm] = nom + s
        return MetricCertificate(cert.M, R, {"M": cert.grams.get("M"), **grams} if "M" in cert.grams else grams,
                                 cert.eps, cert.beta, cert.degree, cert.semi,
                                 _diagnostics(sol, retried), cert.system, vals)
    return fn


def nominal_uncertainty_range(sys: DynSystem, cert: MetricCertificate, param: str,
                              tol: float = DEFAULT_TOL, cap: float = BRACKET_CAP,
                              opts: SolverOptions | None = None) -> UncertaintyResult:
    """Asymmetric parameter range over which the fixed metric still certifies contraction."""
    opts = opts or SolverOptions()
    nom = sys.param_values(cert.params)[param]
    R0, Rs = _check_nominal(sys, cert, [param], opts)
    trace: list = []
    ends, capped, certs = [], [], {}
    for sign in (-1.0, 1.0):
        fn = _fixed_probe_fn(sys, cert, R0, Rs, [sign], opts, ([param], [nom]))
        t: list = []
        step, c, cp = bisect_up(fn, 0.0, cert, BRACKET_START, cap, tol, t)
        trace.extend(Probe(nom + sign * p.value, p.feasible, p.status, p.retried) for p in t)
        ends.append(nom + sign * step)
        capped.append(cp)
        certs["lower" if sign < 0 else "upper"] = c
    return UncertaintyResult("asymmetric-range", (ends[0], ends[1]), cert, trace, (param,), (nom,),
                             tuple(capped), certs)


def _joint_probe_fn(sys, degree, names, corners, eps, opts, structure_vars=None, params=None):
    f_nom, gs = sys.affine_parts(names, params)
    vals = sys.param_values(params)

    def fn(gamma):
        prog, M = _metric_program(sys, degree, structure_vars)
        R0 = _rate_template(M, f_nom, 0.0)
        Rk = [_rate_template(M, g, 0.0) for g in gs]
        sosprog.sos_matrix_constraint(prog, M, eps, "M")
        for idx, corner in enumerate(corners):
            R = R0.combine(*[(gamma * s, Rm) for s, Rm in zip(corner, Rk)])
            sosprog.sos_matrix_constraint(prog, -R, eps, f"R{idx + 1}")
        sdp, sol, retried = _solve_program(prog, opts)
        if sol.status != Status.FEASIBLE:
            _raise_for(sol, retried, f"joint probe at {gamma:g}")
        temps, grams = sosprog.recover(prog, sdp, sol)
        Mc = _tidy(temps["M"].to_float())
        return MetricCertificate(Mc, rate_matrix(Mc, f_nom, 0.0), grams, eps, 0.0, degree, False,
                                 _diagnostics(sol, retried), sys.name, dict(vals))
    return fn


def _optimize(sys, degree, names, corners, kind, tol, eps, cap, opts, **kw):
    opts = opts or SolverOptions()
    fn = _joint_probe_fn(sys, degree, names, corners, eps, opts, **kw)
    base, pr = _try(fn, 0.0)
    trace = [pr]
    if base is None:
        raise InfeasibleError(SearchReport(Status(pr.status), -1.0, 0, 0, 0, 0, "infeasible at gamma = 0",
                                          pr.retried), f"{kind} search")
    gamma, cert, capped = bisect_up(fn, 0.0, base, BRACKET_START, cap, tol, trace)
    nom = tuple(sys.param_values(kw.get("params"))[n] for n in names)
    return UncertaintyResult(kind, gamma, cert, trace, tuple(names), nom, (capped,))


def optimize_symmetric_range(sys: DynSystem, degree: int, param: str, tol: float = DEFAULT_TOL,
                             eps: float = DEFAULT_EPS, cap: float = BRACKET_CAP,
                             opts: SolverOptions | None = None, **kw) -> UncertaintyResult:
    """Largest gamma with one metric certifying |delta - nominal| <= gamma."""
    return _optimize(sys, degree, [param], [(1.0,), (-1.0,)], "symmetric-interval", tol, eps, cap, opts, **kw)


def optimize_box(sys: DynSystem, degree: int, names: Sequence[str], tol: float = DEFAULT_TOL,
                 eps: float = DEFAULT_EPS, cap: float = BRACKET_CAP,
                 opts: SolverOptions | None = None, **kw) -> UncertaintyResult:
    """Largest square half-width gamma certified by one metric at all four corners.

    ``names`` are the two uncertain parameters; ``params=`` in ``kw`` overrides
    nominal values as elsewhere.
    """
    if len(names) != 2:
        raise ValueError("box search needs exactly two parameters")
    corners = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
    return _optimize(sys, degree, list(names), corners, "box", tol, eps, cap, opts, **kw)


def polytope_inner_approx(sys: DynSystem, cert: MetricCertificate, params: Sequence[str],
                          tol: float = DEFAULT_TOL, cap: float = BRACKET_CAP,
                          opts: SolverOptions | None = None) -> UncertaintyResult:
    """Four diagonal vertices whose hull is certified under the fixed metric."""
    if len(params) != 2:
        raise ValueError("polytope search needs exactly two parameters")
    opts = opts or SolverOptions()
    vals = sys.param_values(cert.params)
    nom = [vals[p] for p in params]
    R0, Rs = _check_nominal(sys, cert, list(params), opts)
    trace, verts, capped, certs = [], [], [], {}
    for d in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]:
        fn = _fixed_probe_fn(sys, cert, R0, Rs, d, opts, (list(params), nom))
        t: list = []
        g, c, cp = bisect_up(fn, 0.0, cert, BRACKET_START, cap, tol, t)
        trace.extend(t)
        verts.append((nom[0] + d[0] * g, nom[1] + d[1] * g))
        capped.append(cp)
        certs[d] = c
    return UncertaintyResult("polytope", verts, cert, trace, tuple(params), tuple(nom), tuple(capped), certs)


def lyapunov_from_metric(sys: DynSystem, cert: MetricCertificate) -> Polynomial:
    """V = f^T M f at the certificate's parameter values."""
    if sys.inputs:
        raise ValueError("Lyapunov construction needs an autonomous system")
    f = sys.field_at(cert.params)
    M = cert.M
    if M.names != tuple(sys.space):
        raise ValueError("certificate and system variables differ")
    V = Polynomial(M.names)
    for i in range(sys.n):
        for j in range(sys.n):
            if M.entries[i][j].terms:
                V = V + f[i] * M.entries[i][j] * f[j]
    return V


__all__ = [
    "DynSystem", "Param", "MetricCertificate", "SearchReport", "InfeasibleError", "NumericalError",
    "SearchError", "NonAffineParameter", "SolverOptions", "find_metric", "max_rate", "RateResult",
    "UncertaintyResult", "nominal_uncertainty_range", "optimize_symmetric_range", "optimize_box",
    "polytope_inner_approx", "lyapunov_from_metric", "Probe", "WANG_MICHEL_BOUND",
]
