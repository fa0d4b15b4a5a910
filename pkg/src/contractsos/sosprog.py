"""Parametrised SOS programs and their compilation to block SDPs.

A program owns decision variables, polynomial-matrix templates whose
coefficients are affine in those variables, SOS-matrix constraints and
linear equalities. :func:`compile` turns it into an :class:`SdpProblem`
with one Gram block per matrix constraint, using the bipartite basis
``{y_j x^a : |a| <= d/2}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .polyalg import (
    PolyMatrix, Polynomial, format_number, format_polynomial, grlex_key,
    monomials_upto, parse_polynomial,
)
from .sdpsolve import BlockRows, SdpProblem, SdpSolution, Status

DEFAULT_EPS = 1e-4
MAX_BASIS_DEGREE = 12


class BasisOverflow(ValueError):
    """Constraint degree exceeds the configured cap."""


class PresolveInfeasible(ValueError):
    """Equality constraints are inconsistent."""


@dataclass(frozen=True)
class DecisionVar:
    id: int
    label: str


class LinExpr:
    """Affine expression ``const + sum coef * var`` keyed by variable id."""

    __slots__ = ("const", "coefs")

    def __init__(self, const=0.0, coefs: dict | None = None):
        self.const = float(const)
        self.coefs = {k: float(v) for k, v in (coefs or {}).items() if v}

    @classmethod
    def var(cls, v: DecisionVar | int, coef=1.0) -> "LinExpr":
        return cls(0.0, {v.id if isinstance(v, DecisionVar) else v: coef})

    def _lift(self, o):
        return o if isinstance(o, LinExpr) else LinExpr(o)

    def __add__(self, o):
        o = self._lift(o)
        out = dict(self.coefs)
        for k, v in o.coefs.items():
            s = out.get(k, 0.0) + v
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        r = LinExpr.__new__(LinExpr)
        r.const = self.const + o.const
        r.coefs = out
        return r

    __radd__ = __add__

    def __neg__(self):
        r = LinExpr.__new__(LinExpr)
        r.const = -self.const
        r.coefs = {k: -v for k, v in self.coefs.items()}
        return r

    def __sub__(self, o):
        return self + (-self._lift(o))

    def __rsub__(self, o):
        return self._lift(o) - self

    def __mul__(self, s):
        if isinstance(s, LinExpr):
            if s.coefs and self.coefs:
                raise TypeError("product of two affine expressions is not affine")
            if not s.coefs:
                s = s.const
            else:
                return s * self.const
        s = float(s)
        r = LinExpr.__new__(LinExpr)
        r.const = self.const * s
        r.coefs = {k: v * s for k, v in self.coefs.items()} if s else {}
        return r

    __rmul__ = __mul__

    def __bool__(self):
        return bool(self.const) or bool(self.coefs)

    def __eq__(self, o):
        o = self._lift(o) if isinstance(o, (int, float, LinExpr)) else None
        if o is None:
            return NotImplemented
        return self.const == o.const and self.coefs == o.coefs

    def __hash__(self):
        return hash((self.const, frozenset(self.coefs.items())))

    def __repr__(self):
        parts = [f"{self.const:g}"] if self.const or not self.coefs else []
        parts += [f"{v:g}*c{k}" for k, v in sorted(self.coefs.items())]
        return "LinExpr(" + " + ".join(parts) + ")"

    def is_constant(self) -> bool:
        return not self.coefs

    def value(self, values: dict) -> float:
        return self.const + sum(v * values[k] for k, v in self.coefs.items())

    def substitute(self, mapping: dict) -> "LinExpr":
        out = LinExpr(self.const)
        keep = {}
        for k, v in self.coefs.items():
            if k in mapping:
                out = out + mapping[k] * v
            else:
                keep[k] = v
        return out + LinExpr(0.0, keep)


def _as_param(p: Polynomial) -> Polynomial:
    return Polynomial(p.names, {m: c if isinstance(c, LinExpr) else LinExpr(c) for m, c in p.terms.items()})


class ParamPolyMatrix(PolyMatrix):
    """Polynomial matrix whose coefficients are :class:`LinExpr`."""

    @classmethod
    def lift(cls, mat: PolyMatrix) -> "ParamPolyMatrix":
        return cls([[_as_param(p) for p in r] for r in mat.entries], symmetric=mat.symmetric)

    @classmethod
    def wrap(cls, mat: PolyMatrix) -> "ParamPolyMatrix":
        out = cls.__new__(cls)
        for s in PolyMatrix.__slots__:
            setattr(out, s, getattr(mat, s))
        return out

    def decision_ids(self) -> set:
        return {k for r in self.entries for p in r for c in p.terms.values() for k in c.coefs}

    def evaluate_params(self, values: dict) -> PolyMatrix:
        ents = [[Polynomial(p.names, {m: c.value(values) for m, c in p.terms.items()}) for p in r]
                for r in self.entries]
        return PolyMatrix(ents, symmetric=self.symmetric)

    def substitute(self, mapping: dict) -> "ParamPolyMatrix":
        ents = [[Polynomial(p.names, {m: c.substitute(mapping) for m, c in p.terms.items()}) for p in r]
                for r in self.entries]
        return ParamPolyMatrix(ents, symmetric=self.symmetric)

    def combine(self, *terms) -> "ParamPolyMatrix":
        """self + sum s_k * A_k for pairs (s_k, A_k)."""
        acc: PolyMatrix = self
        for s, A in terms:
            if s:
                acc = acc + A.scale(float(s))
        return ParamPolyMatrix.wrap(acc)


@dataclass
class MatrixSosConstraint:
    name: str
    matrix: ParamPolyMatrix
    eps: float


@dataclass
class SosProgram:
    """Decision variables plus matrix-SOS constraints, equalities and an objective."""

    vars: list = field(default_factory=list)
    constraints: list = field(default_factory=list)
    equalities: list = field(default_factory=list)   # LinExpr == 0
    objective: LinExpr | None = None
    templates: dict = field(default_factory=dict)
    backmap: dict | None = None  # eliminated var id -> LinExpr over remaining vars
    max_degree: int = MAX_BASIS_DEGREE

    def new_var(self, label: str) -> DecisionVar:
        v = DecisionVar(len(self.vars) if not self.vars else self.vars[-1].id + 1, label)
        self.vars.append(v)
        return v

    def var_ids(self) -> list:
        return [v.id for v in self.vars]

    def add_equality(self, expr: LinExpr):
        self.equalities.append(expr)

    def check(self):
        known = set(self.var_ids())
        for c in self.constraints:
            missing = c.matrix.decision_ids() - known
            if missing:
                raise ValueError(f"constraint {c.name} uses unregistered variables {sorted(missing)}")
        for e in self.equalities:
            if set(e.coefs) - known:
                raise ValueError("equality uses unregistered variables")


def metric_template(prog: SosProgram, names: Sequence[str], degree: int,
                    structure_vars: Iterable[str] | None = None, n: int | None = None,
                    name: str = "M") -> ParamPolyMatrix:
    """Symmetric n x n matrix of full polynomials of ``degree`` with fresh coefficients.

    Only upper-triangle coefficients are decision variables; the lower
    triangle aliases them. ``structure_vars`` restricts the entries to
    polynomials in a subset of variables.
    """
    if degree < 0 or degree % 2:
        raise ValueError(f"metric degree must be even and non-negative, got {degree}")
    names = tuple(names)
    n = len(names) if n is None else n
    if structure_vars is None:
        active = list(range(len(names)))
    else:
        structure_vars = list(structure_vars)
        unknown = [s for s in structure_vars if s not in names]
        if unknown:
            raise ValueError(f"structure variables {unknown} are not state variables")
        active = [names.index(s) for s in structure_vars]
    monos = sorted(monomials_upto(len(names), degree, active), key=grlex_key)
    ents = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            terms = {}
            for k, mono in enumerate(monos):
                v = prog.new_var(f"{name}{i + 1}{j + 1}_{k + 1}")
                terms[mono] = LinExpr.var(v)
            ents[i][j] = ents[j][i] = Polynomial(names, terms)
    M = ParamPolyMatrix(ents, symmetric=True)
    prog.templates[name] = M
    return M


def sos_matrix_constraint(prog: SosProgram, S: PolyMatrix, eps: float = 0.0,
                          name: str | None = None) -> MatrixSosConstraint:
    """Require ``S - eps I`` to be an SOS matrix."""
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if S.rows != S.cols:
        raise ValueError("SOS matrix constraints need a square matrix")
    for i in range(S.rows):
        for j in range(i):
            if S.entries[i][j] != S.entries[j][i]:
                raise ValueError("SOS matrix constraints need a symmetric matrix")
    P = S if isinstance(S, ParamPolyMatrix) else ParamPolyMatrix.lift(S)
    if not all(isinstance(c, LinExpr) for r in P.entries for p in r for c in p.terms.values()):
        P = ParamPolyMatrix.lift(P)
    con = MatrixSosConstraint(name or f"S{len(prog.constraints)}", P, float(eps))
    prog.constraints.append(con)
    return con


def pin_zero(prog: SosProgram, E: PolyMatrix, row: int, col: int):
    """Add equalities forcing every coefficient of entry (row, col) to zero."""
    if not (0 <= row < E.rows and 0 <= col < E.cols):
        raise IndexError("entry outside the matrix")
    for mono, c in E.entries[row][col].sorted_terms():
        c = c if isinstance(c, LinExpr) else LinExpr(c)
        if c:
            prog.add_equality(c)


def presolve(prog: SosProgram, tol: float = 1e-10) -> SosProgram:
    """Eliminate variables fixed by the equality constraints.

    Gaussian elimination with partial pivoting on the equality system picks
    pivot variables and expresses them through the remaining ones; the
    substitution is applied to every constraint, template and the objective.
    The returned program carries ``backmap`` for solution recovery.
    """
    ids = prog.var_ids()
    col = {v: k for k, v in enumerate(ids)}
    rows = [e for e in prog.equalities if e]
    n = len(ids)
    if not rows:
        out = SosProgram(list(prog.vars), list(prog.constraints), [], prog.objective,
                         dict(prog.templates), dict(prog.backmap or {}), prog.max_degree)
        return out
    A = np.zeros((len(rows), n))
    rhs = np.zeros(len(rows))
    for r, e in enumerate(rows):
        for k, v in e.coefs.items():
            A[r, col[k]] = v
        rhs[r] = -e.const
    scale = max(1.0, np.abs(A).max())
    # reduced row echelon form
    Ab = np.hstack([A, rhs[:, None]])
    pivots = []
    r = 0
    for c in range(n):
        if r >= Ab.shape[0]:
            break
        p = r + int(np.argmax(np.abs(Ab[r:, c])))
        if abs(Ab[p, c]) <= tol * scale:
            continue
        Ab[[r, p]] = Ab[[p, r]]
        Ab[r] /= Ab[r, c]
        for q in range(Ab.shape[0]):
            if q != r and Ab[q, c]:
                Ab[q] -= Ab[q, c] * Ab[r]
        pivots.append(c)
        r += 1
    for q in range(r, Ab.shape[0]):
        if abs(Ab[q, -1]) > tol * max(1.0, np.abs(rhs).max()):
            raise PresolveInfeasible("inconsistent equality constraints")
    pivot_set = set(pivots)
    mapping = {}
    for k, c in enumerate(pivots):
        coefs = {ids[j]: -Ab[k, j] for j in range(n) if j not in pivot_set and abs(Ab[k, j]) > tol * scale}
        mapping[ids[c]] = LinExpr(Ab[k, -1], coefs)
    remaining = [v for v in prog.vars if v.id not in mapping]
    cons = [MatrixSosConstraint(c.name, c.matrix.substitute(mapping), c.eps) for c in prog.constraints]
    temps = {k: t.substitute(mapping) for k, t in prog.templates.items()}
    obj = prog.objective.substitute(mapping) if prog.objective is not None else None
    back = {}
    if prog.backmap:
        for k, e in prog.backmap.items():
            back[k] = e.substitute(mapping)
    back.update(mapping)
    return SosProgram(remaining, cons, [], obj, temps, back, prog.max_degree)


# -- compilation ---------------------------------------------------------------

@dataclass
class BlockLayout:
    name: str
    basis: list            # [(j, alpha)] meaning y_j * x^alpha
    names: tuple
    size: int
    eps: float
    matrix: ParamPolyMatrix


@dataclass
class Layout:
    var_ids: list
    blocks: list           # BlockLayout per PSD block


def _entry_degree(S: PolyMatrix) -> int:
    return max((sum(m) for r in S.entries for p in r for m in p.terms), default=0)


def gram_basis(m: int, nvars: int, half: int) -> list:
    monos = monomials_upto(nvars, half)
    return [(j, a) for j in range(m) for a in monos]


def _constraint_rows(S: ParamPolyMatrix, eps: float):
    """Target coefficients of y^T (S - eps I) y keyed by (i, j, gamma), i <= j."""
    target: dict = {}
    n = S.rows
    for i in range(n):
        for j in range(i, n):
            w = 1.0 if i == j else 2.0
            for mono, c in S.entries[i][j].terms.items():
                key = (i, j, mono)
                target[key] = target[key] + c * w if key in target else c * w
    if eps:
        zero = (0,) * len(S.names)
        for i in range(n):
            key = (i, i, zero)
            target[key] = target.get(key, LinExpr(0.0)) - eps
    return target


def _pairs(basis):
    groups: dict = {}
    for p in range(len(basis)):
        jp, ap = basis[p]
        for q in range(p, len(basis)):
            jq, aq = basis[q]
            key = (min(jp, jq), max(jp, jq), tuple(x + y for x, y in zip(ap, aq)))
            groups.setdefault(key, []).append((p, q))
    return groups


def _prune(basis, target):
    """Drop basis elements whose Gram diagonal is forced to zero.

    A row whose target is identically zero and whose only Gram entries are
    diagonal pins those diagonal entries to zero; PSD then zeroes the whole
    row and column, so the element can be removed. Repeat to a fixed point.
    """
    basis = list(basis)
    while True:
        groups = _pairs(basis)
        drop = set()
        for key, prs in groups.items():
            t = target.get(key)
            if t:
                continue
            if all(p == q for p, q in prs):
                drop.update(p for p, _ in prs)
        if not drop:
            return basis, groups
        basis = [b for k, b in enumerate(basis) if k not in drop]


def compile(prog: SosProgram, prune: bool = True, trace_weight: float = 0.0) -> SdpProblem:
    """Compile to a block SDP; the result carries ``layout`` for :func:`recover`.

    Each equality row reads ``<B_row, Q> - sum_k a_k c_k = const`` where the
    right-hand side collects the constant part of the target coefficient.
    ``trace_weight > 0`` adds ``trace_weight * sum_b trace(Q_b)`` to the
    objective: the feasible set is unchanged, but a pure feasibility problem
    over a cone gets a bounded target for the interior-point iterates.
    """
    prog.check()
    ids = prog.var_ids()
    col = {v: k for k, v in enumerate(ids)}
    row_index: dict = {}
    rhs: list = []
    free_entries: list = []
    blocks: list = []
    layouts: list = []

    def row_of(key):
        if key not in row_index:
            row_index[key] = len(rhs)
            rhs.append(0.0)
        return row_index[key]

    for bidx, con in enumerate(prog.constraints):
        S = con.matrix
        d = _entry_degree(S)
        if d > prog.max_degree:
            raise BasisOverflow(f"constraint {con.name} has degree {d} > cap {prog.max_degree}")
        half = math.ceil(d / 2)
        basis = gram_basis(S.rows, len(S.names), half)
        target = _constraint_rows(S, con.eps)
        if prune:
            basis, groups = _prune(basis, target)
        else:
            groups = _pairs(basis)
        size = len(basis)
        keys = sorted(set(groups) | {k for k, t in target.items() if t},
                      key=lambda k: (k[0], k[1], grlex_key(k[2])))
        mats = {}
        for key in keys:
            t = target.get(key)
            prs = groups.get(key, [])
            if not prs and not t:
                continue
            r = row_of((bidx,) + key)
            if t:
                rhs[r] = t.const
                for k, v in t.coefs.items():
                    free_entries.append((r, col[k], -v))
            if prs:
                mat = np.zeros((size, size))
                for p, q in prs:
                    mat[q, p] += 1.0
                    if p != q:
                        mat[p, q] += 1.0
                mats[r] = mat
        rows = np.array(sorted(mats), dtype=int)
        stack = np.array([mats[r] for r in rows]) if rows.size else np.zeros((0, size, size))
        blocks.append((size, BlockRows(rows, stack)))
        layouts.append(BlockLayout(con.name, basis, S.names, size, con.eps, S))

    eq_rows = []
    for e in prog.equalities:
        if not e:
            continue
        r = len(rhs)
        rhs.append(-e.const)
        for k, v in e.coefs.items():
            free_entries.append((r, col[k], v))
        eq_rows.append(r)

    m = len(rhs)
    a_free = np.zeros((m, len(ids)))
    for r, c, v in free_entries:
        a_free[r, c] += v
    c_free = np.zeros(len(ids))
    if prog.objective is not None:
        for k, v in prog.objective.coefs.items():
            c_free[col[k]] = v
    c_blocks = [trace_weight * np.eye(s) for s, _ in blocks] if trace_weight else None
    sdp = SdpProblem([s for s, _ in blocks], len(ids), np.array(rhs), a_free,
                     [br for _, br in blocks], c_free, c_blocks)
    sdp.layout = Layout(ids, layouts)
    return sdp


def trace_slice(sdp: SdpProblem, bound: float) -> SdpProblem:
    """Feasibility version of ``sdp`` restricted to ``sum_b trace(Q_b) <= bound``.

    The bound is carried by an extra 1x1 slack block and one extra row; the
    objective is dropped. Used to re-centre a solution found by trace
    minimisation.
    """
    m = sdp.m
    a_blocks = []
    for n, br in zip(sdp.block_dims, sdp.a_blocks):
        rows = np.append(br.rows, m)
        mats = np.concatenate([br.mats, np.eye(n)[None]], axis=0)
        a_blocks.append(BlockRows(rows, mats))
    a_blocks.append(BlockRows(np.array([m]), np.ones((1, 1, 1))))
    a_free = np.vstack([sdp.a_free, np.zeros((1, sdp.free_dim))])
    out = SdpProblem(sdp.block_dims + [1], sdp.free_dim, np.append(sdp.b, bound), a_free, a_blocks)
    out.layout = sdp.layout
    return out


# -- recovery ------------------------------------------------------------------

@dataclass
class GramCertificate:
    """Gram matrix Q and basis Z with y^T (S - eps I) y = Z^T Q Z."""

    basis: list            # [(j, alpha)]
    gram: np.ndarray
    target: PolyMatrix     # S (concrete)
    eps: float = 0.0
    name: str = ""

    def gram_polynomial(self) -> dict:
        """Coefficients of Z^T Q Z keyed by (i, j, gamma), i <= j."""
        out: dict = {}
        Q = self.gram
        for p, (jp, ap) in enumerate(self.basis):
            for q, (jq, aq) in enumerate(self.basis):
                key = (min(jp, jq), max(jp, jq), tuple(x + y for x, y in zip(ap, aq)))
                out[key] = out.get(key, 0.0) + Q[p, q]
        return out

    def target_polynomial(self) -> dict:
        return {k: float(v.const if isinstance(v, LinExpr) else v)
                for k, v in _constraint_rows(ParamPolyMatrix.lift(self.target), self.eps).items()}

    def residual(self) -> float:
        """Max coefficientwise mismatch between Z^T Q Z and y^T (S - eps I) y."""
        a, b = self.gram_polynomial(), self.target_polynomial()
        return max((abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in set(a) | set(b)), default=0.0)

    def min_eigenvalue(self) -> float:
        if not self.gram.size:
            return 0.0
        return float(np.linalg.eigvalsh((self.gram + self.gram.T) / 2)[0])

    def is_valid(self, tol: float = 1e-7) -> bool:
        Q = self.gram
        sym = np.allclose(Q, Q.T, atol=1e-12 * max(1.0, np.abs(Q).max(initial=0.0)))
        psd = self.min_eigenvalue() >= -tol * (1.0 + np.linalg.norm(Q, 2) if Q.size else 1.0)
        return sym and psd and self.residual() <= tol

    def scaled(self, c: float) -> "GramCertificate":
        return GramCertificate(self.basis, self.gram * c, self.target.scale(c), self.eps * c, self.name)


class RecoveryError(RuntimeError):
    pass


def decision_values(prog: SosProgram, sol: SdpSolution) -> dict:
    """Solved values of every decision variable, including presolve-eliminated ones."""
    ids = prog.var_ids()
    vals = {k: float(v) for k, v in zip(ids, sol.x_free)}
    if prog.backmap:
        for k, e in prog.backmap.items():
            vals[k] = e.value(vals)
    return vals


def recover(prog: SosProgram, sdp: SdpProblem, sol: SdpSolution, allow_inaccurate: bool = False):
    """Concrete template matrices and Gram certificates from a solution.

    Returns ``(templates, grams)``: dicts keyed by template name and by
    constraint name.
    """
    ok = {Status.FEASIBLE} | ({Status.INACCURATE} if allow_inaccurate else set())
    if sol.status not in ok:
        raise RecoveryError(f"cannot recover from a {sol.status} solution")
    vals = decision_values(prog, sol)
    temps = {k: t.evaluate_params(vals) for k, t in prog.templates.items()}
    grams = {}
    for bl, Q in zip(sdp.layout.blocks, sol.blocks):
        S = bl.matrix.evaluate_params(vals)
        grams[bl.name] = GramCertificate(bl.basis, (Q + Q.T) / 2, S, bl.eps, bl.name)
    return temps, grams


# -- certificate file ------------------------------------------------------------

def _basis_str(names, jy, alpha) -> str:
    parts = [f"y{jy + 1}"] + [f"{nm}^{e}" if e > 1 else nm for nm, e in zip(names, alpha) if e]
    return "*".join(parts)


def _parse_basis(tok: str, names) -> tuple:
    parts = tok.split("*")
    j = int(parts[0][1:]) - 1
    alpha = [0] * len(names)
    for p in parts[1:]:
        nm, _, e = p.partition("^")
        alpha[names.index(nm)] += int(e) if e else 1
    return (j, tuple(alpha))


def write_certificate(path, metadata: dict, matrices: dict, grams: dict, header: Sequence[str] = ()):
    with open(path, "w") as fh:
        fh.write(dumps_certificate(metadata, matrices, grams, header))


def dumps_certificate(metadata: dict, matrices: dict, grams: dict, header: Sequence[str] = ()) -> str:
    """Line-oriented key/value text with ``[section]`` headers."""
    lines = ["format = 1"] + [f"# {h}" for h in header]
    lines.append("[metadata]")
    for k, v in metadata.items():
        if isinstance(v, (list, tuple)):
            v = " ".join(map(str, v))
        elif isinstance(v, float):
            v = format_number(v)
        lines.append(f"{k} = {v}")
    for mname, mat in matrices.items():
        lines.append(f"[matrix {mname}]")
        lines.append(f"size = {mat.rows}")
        for i in range(mat.rows):
            for j in range(i, mat.cols):
                lines.append(f"{mname}{i + 1}{j + 1} = {format_polynomial(mat.entries[i][j])}")
    for gname, g in grams.items():
        lines.append(f"[gram {gname}]")
        names = g.target.names
        lines.append(f"eps = {format_number(g.eps)}")
        lines.append("basis = " + " ".join(_basis_str(names, j, a) for j, a in g.basis))
        Q = g.gram
        for i in range(Q.shape[0]):
            lines.append("q = " + " ".join(format_number(Q[i, k]) for k in range(i + 1)))
    return "\n".join(lines) + "\n"


def read_certificate(path):
    with open(path) as fh:
        return loads_certificate(fh.read())


def loads_certificate(text: str):
    """Inverse of :func:`dumps_certificate` -> (metadata, matrices, grams).

    Gram targets are rebuilt by name: gram ``M`` certifies matrix ``M``;
    gram ``R...`` certifies the negated rate matrix of the same name when present.
    """
    meta: dict = {}
    mats_raw: dict = {}
    grams_raw: dict = {}
    section = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            section = line[1:-1].split()
            if section[0] == "matrix":
                mats_raw[section[1]] = {}
            elif section[0] == "gram":
                grams_raw[section[1]] = {"q": []}
            continue
        key, _, val = (s.strip() for s in line.partition("="))
        if section is None:
            if key != "format":
                raise ValueError(f"unexpected line before sections: {line!r}")
            if val != "1":
                raise ValueError(f"unsupported certificate format {val!r}")
            continue
        if section[0] == "metadata":
            meta[key] = val
        elif section[0] == "matrix":
            mats_raw[section[1]][key] = val
        elif section[0] == "gram":
            g = grams_raw[section[1]]
            if key == "q":
                g["q"].append([float(t) for t in val.split()])
            else:
                g[key] = val
    names = tuple(meta.get("states", "").split())
    matrices = {}
    for mname, d in mats_raw.items():
        n = int(d.pop("size"))
        ents = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                p = parse_polynomial(d[f"{mname}{i + 1}{j + 1}"], names)
                ents[i][j] = ents[j][i] = p
        matrices[mname] = PolyMatrix(ents, symmetric=True)
    grams = {}
    for gname, g in grams_raw.items():
        basis = [_parse_basis(t, names) for t in g.get("basis", "").split()]
        k = len(basis)
        Q = np.zeros((k, k))
        for i, row in enumerate(g["q"]):
            Q[i, : len(row)] = row
        Q = np.tril(Q) + np.tril(Q, -1).T
        grams[gname] = {"basis": basis, "gram": Q, "eps": float(g.get("eps", 0.0))}
    return meta, matrices, grams


__all__ = [
    "DecisionVar", "LinExpr", "ParamPolyMatrix", "SosProgram", "MatrixSosConstraint",
    "metric_template", "sos_matrix_constraint", "pin_zero", "presolve", "compile", "recover",
    "GramCertificate", "BasisOverflow", "PresolveInfeasible", "RecoveryError", "gram_basis",
    "decision_values", "write_certificate", "read_certificate", "dumps_certificate",
    "loads_certificate", "DEFAULT_EPS", "MAX_BASIS_DEGREE",
]
