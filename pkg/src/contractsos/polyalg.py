"""Sparse multivariate polynomials and polynomial matrices.

Polynomials live in a fixed variable space (an ordered tuple of names) and
store their terms as a map from exponent tuples to coefficients. Coefficients
are usually floats, but any ring-like value works: the text parser builds
polynomials over ``fractions.Fraction`` so decimal literals add exactly, and
:mod:`contractsos.sosprog` uses affine expressions in decision variables.
"""

from __future__ import annotations

import itertools
import math
import re
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

Monomial = tuple  # tuple[int, ...]


def grlex_key(mono: Monomial):
    """Sort key for graded lexicographic order, highest term first."""
    return (-sum(mono), tuple(-e for e in mono))


def monomials_upto(nvars: int, degree: int, active: Sequence[int] | None = None) -> list[Monomial]:
    """All exponent vectors of total degree <= ``degree``, in ascending grlex order.

    ``active`` restricts the support to a subset of variable indices.
    """
    active = list(range(nvars)) if active is None else sorted(active)
    out = []
    for d in range(degree + 1):
        for combo in itertools.combinations_with_replacement(active, d):
            e = [0] * nvars
            for i in combo:
                e[i] += 1
            out.append(tuple(e))
    # combinations_with_replacement gives lex order inside a degree; flip to grlex ascending
    return sorted(out, key=lambda m: (sum(m), tuple(-x for x in m)))


class Polynomial:
    """Sparse polynomial over a named variable space.

    Instances are treated as immutable; arithmetic returns new objects.
    """

    __slots__ = ("names", "terms")

    def __init__(self, names: Sequence[str], terms: dict | None = None):
        self.names = tuple(names)
        n = len(self.names)
        clean = {}
        if terms:
            for mono, c in terms.items():
                if len(mono) != n:
                    raise ValueError(f"exponent {mono} does not match {n} variables")
                if c:
                    clean[tuple(mono)] = c
        self.terms = clean

    # -- construction -------------------------------------------------
    @classmethod
    def constant(cls, names, value) -> "Polynomial":
        return cls(names, {(0,) * len(tuple(names)): value})

    @classmethod
    def variable(cls, names, var: int | str) -> "Polynomial":
        names = tuple(names)
        i = names.index(var) if isinstance(var, str) else var
        e = [0] * len(names)
        e[i] = 1
        return cls(names, {tuple(e): 1.0})

    @classmethod
    def zero(cls, names) -> "Polynomial":
        return cls(names)

    # -- basic properties ---------------------------------------------
    @property
    def nvars(self) -> int:
        return len(self.names)

    def degree(self) -> int:
        """Total degree; the zero polynomial has degree -1."""
        return max((sum(m) for m in self.terms), default=-1)

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, mono: Monomial):
        return self.terms.get(tuple(mono), 0)

    def sorted_terms(self) -> list:
        return sorted(self.terms.items(), key=lambda kv: grlex_key(kv[0]))

    def variables_used(self) -> set[int]:
        return {i for m in self.terms for i, e in enumerate(m) if e}

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.names == other.names and self.terms == other.terms
        if isinstance(other, (int, float, Fraction)):
            return self.terms == ({(0,) * self.nvars: other} if other else {})
        return NotImplemented

    def __hash__(self):
        return hash((self.names, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        return f"Polynomial({self.to_string()!r})"

    # -- arithmetic -----------------------------------------------------
    def _check(self, other: "Polynomial"):
        if self.names is not other.names and self.names != other.names:
            raise ValueError(f"variable-set mismatch: {self.names} vs {other.names}")

    def _lift(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        return Polynomial.constant(self.names, other)

    def __add__(self, other):
        other = self._lift(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            if m in out:
                s = out[m] + c
                if s:
                    out[m] = s
                else:
                    del out[m]
            else:
                out[m] = c
        return _raw(self.names, out)

    __radd__ = __add__

    def __neg__(self):
        return _raw(self.names, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            if isinstance(other, (int, float, Fraction, np.floating)):
                if not other:
                    return Polynomial(self.names)
                return _raw(self.names, {m: c * other for m, c in self.terms.items()})
            # ring element without polynomial structure (e.g. an affine expression)
            return Polynomial(self.names, {m: c * other for m, c in self.terms.items()})
        self._check(other)
        out: dict = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                m = tuple(x + y for x, y in zip(ma, mb))
                v = ca * cb
                if m in out:
                    out[m] = out[m] + v
                else:
                    out[m] = v
        return Polynomial(self.names, out)

    def __rmul__(self, other):
        if isinstance(other, Polynomial):
            return other.__mul__(self)
        return Polynomial(self.names, {m: other * c for m, c in self.terms.items()})

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("polynomial powers must be non-negative integers")
        result = Polynomial.constant(self.names, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def map_coefficients(self, fn: Callable) -> "Polynomial":
        return Polynomial(self.names, {m: fn(c) for m, c in self.terms.items()})

    def to_float(self) -> "Polynomial":
        return self.map_coefficients(float)

    # -- calculus and evaluation ----------------------------------------
    def differentiate(self, var: int | str) -> "Polynomial":
        i = self.names.index(var) if isinstance(var, str) else var
        if not 0 <= i < self.nvars:
            raise IndexError(f"variable index {i} out of range")
        out = {}
        for m, c in self.terms.items():
            e = m[i]
            if e:
                mm = list(m)
                mm[i] = e - 1
                out[tuple(mm)] = c * e
        return Polynomial(self.names, out)

    def evaluate(self, point: Sequence[float]) -> float:
        """Value at ``point``; powers are accumulated per variable (Horner-style)."""
        if len(point) != self.nvars:
            raise ValueError(f"point has {len(point)} entries, expected {self.nvars}")
        if not self.terms:
            return 0.0
        maxdeg = [0] * self.nvars
        for m in self.terms:
            for i, e in enumerate(m):
                if e > maxdeg[i]:
                    maxdeg[i] = e
        powers = []
        for i, x in enumerate(point):
            p = [1.0]
            for _ in range(maxdeg[i]):
                p.append(p[-1] * x)
            powers.append(p)
        total = 0.0
        for m, c in self.terms.items():
            v = float(c)
            for i, e in enumerate(m):
                if e:
                    v *= powers[i][e]
            total += v
        return total

    def compiled(self) -> "CompiledPoly":
        return CompiledPoly(self)

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        return self.compiled()(points)

    # -- restructuring --------------------------------------------------
    def rename(self, names: Sequence[str]) -> "Polynomial":
        """Same terms, new variable names (positions unchanged)."""
        names = tuple(names)
        if len(names) != self.nvars:
            raise ValueError("rename must keep the variable count")
        return _raw(names, dict(self.terms))

    def restrict(self, names: Sequence[str], values: dict[str, float] | None = None) -> "Polynomial":
        """Move to the space ``names`` (a subset of ours), substituting ``values``
        for every dropped variable. Dropped variables without a value must not occur."""
        names = tuple(names)
        values = values or {}
        idx = [self.names.index(nm) for nm in names]
        dropped = [i for i in range(self.nvars) if i not in idx]
        out: dict = {}
        for m, c in self.terms.items():
            v = c
            for i in dropped:
                if m[i]:
                    nm = self.names[i]
                    if nm not in values:
                        raise ValueError(f"variable {nm} occurs but has no value")
                    v = v * values[nm] ** m[i]
            mm = tuple(m[i] for i in idx)
            out[mm] = out[mm] + v if mm in out else v
        return Polynomial(names, out)

    def embed(self, names: Sequence[str]) -> "Polynomial":
        """Move to a superset space ``names``."""
        names = tuple(names)
        pos = [names.index(nm) for nm in self.names]
        out = {}
        for m, c in self.terms.items():
            e = [0] * len(names)
            for i, p in enumerate(pos):
                e[p] = m[i]
            out[tuple(e)] = c
        return _raw(names, out)

    def to_string(self, fmt: Callable[[float], str] | None = None) -> str:
        return format_polynomial(self, fmt)


def _raw(names, terms) -> Polynomial:
    p = Polynomial.__new__(Polynomial)
    p.names = names
    p.terms = terms
    return p


class CompiledPoly:
    """Vectorised evaluator: exponent matrix plus coefficient vector."""

    def __init__(self, poly: Polynomial):
        self.nvars = poly.nvars
        if poly.terms:
            self.exps = np.array(list(poly.terms.keys()), dtype=np.int64)
            self.coefs = np.array([float(c) for c in poly.terms.values()])
        else:
            self.exps = np.zeros((0, poly.nvars), dtype=np.int64)
            self.coefs = np.zeros(0)

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.nvars:
            raise ValueError(f"points have {pts.shape[1]} columns, expected {self.nvars}")
        if not self.coefs.size:
            return np.zeros(pts.shape[0])
        mons = np.ones((pts.shape[0], self.coefs.size))
        for i in range(self.nvars):
            col = self.exps[:, i]
            if col.any():
                mons *= pts[:, i : i + 1] ** col[None, :]
        return mons @ self.coefs


# -- polynomial matrices -----------------------------------------------------

class PolyMatrix:
    """Dense grid of polynomials sharing one variable space."""

    __slots__ = ("names", "rows", "cols", "entries", "symmetric")

    def __init__(self, entries: Sequence[Sequence[Polynomial]], symmetric: bool = False):
        self.entries = tuple(tuple(r) for r in entries)
        self.rows = len(self.entries)
        self.cols = len(self.entries[0]) if self.rows else 0
        if any(len(r) != self.cols for r in self.entries):
            raise ValueError("ragged polynomial matrix")
        self.names = self.entries[0][0].names if self.rows and self.cols else ()
        for r in self.entries:
            for p in r:
                if p.names != self.names:
                    raise ValueError("entries live in different variable spaces")
        if symmetric:
            if self.rows != self.cols:
                raise ValueError("symmetric matrices must be square")
            for i in range(self.rows):
                for j in range(i):
                    if self.entries[i][j] != self.entries[j][i]:
                        raise ValueError(f"entry ({i},{j}) differs from ({j},{i})")
        self.symmetric = symmetric

    @classmethod
    def from_numbers(cls, names, values, symmetric=None) -> "PolyMatrix":
        arr = np.asarray(values, dtype=float)
        ents = [[Polynomial.constant(names, float(v)) for v in row] for row in arr]
        if symmetric is None:
            symmetric = arr.shape[0] == arr.shape[1] and np.array_equal(arr, arr.T)
        return cls(ents, symmetric=symmetric)

    @classmethod
    def identity(cls, names, n: int, scale=1.0) -> "PolyMatrix":
        return cls(
            [[Polynomial.constant(names, scale if i == j else 0) for j in range(n)] for i in range(n)],
            symmetric=True,
        )

    @property
    def shape(self):
        return (self.rows, self.cols)

    def __getitem__(self, ij) -> Polynomial:
        i, j = ij
        return self.entries[i][j]

    def __eq__(self, other):
        return isinstance(other, PolyMatrix) and self.entries == other.entries

    def __repr__(self):
        return f"PolyMatrix({self.rows}x{self.cols}, symmetric={self.symmetric})"

    def degree(self) -> int:
        return max((p.degree() for r in self.entries for p in r), default=-1)

    def map(self, fn: Callable[[Polynomial], Polynomial], symmetric: bool | None = None) -> "PolyMatrix":
        sym = self.symmetric if symmetric is None else symmetric
        return PolyMatrix([[fn(p) for p in r] for r in self.entries], symmetric=sym)

    def transpose(self) -> "PolyMatrix":
        return PolyMatrix([[self.entries[i][j] for i in range(self.rows)] for j in range(self.cols)],
                          symmetric=self.symmetric)

    @property
    def T(self):
        return self.transpose()

    def __add__(self, other: "PolyMatrix") -> "PolyMatrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return PolyMatrix(
            [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self.entries, other.entries)],
            symmetric=self.symmetric and other.symmetric,
        )

    def __sub__(self, other: "PolyMatrix") -> "PolyMatrix":
        return self + (-other)

    def __neg__(self) -> "PolyMatrix":
        return self.map(lambda p: -p)

    def scale(self, s) -> "PolyMatrix":
        return self.map(lambda p: p * s)

    def __matmul__(self, other: "PolyMatrix") -> "PolyMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch in product")
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = Polynomial(self.names)
                for k in range(self.cols):
                    a, b = self.entries[i][k], other.entries[k][j]
                    if a.terms and b.terms:
                        acc = acc + a * b
                row.append(acc)
            out.append(row)
        return PolyMatrix(out)

    def symmetrized(self) -> "PolyMatrix":
        """Mirror the upper triangle so the symmetric flag holds structurally."""
        n = self.rows
        ents = [[self.entries[min(i, j)][max(i, j)] for j in range(n)] for i in range(n)]
        return PolyMatrix(ents, symmetric=True)

    def evaluate(self, point) -> np.ndarray:
        return np.array([[p.evaluate(point) for p in r] for r in self.entries])

    def compiled(self) -> "CompiledMatrix":
        return CompiledMatrix(self)

    def to_float(self) -> "PolyMatrix":
        return self.map(Polynomial.to_float)


class CompiledMatrix:
    """Evaluate a polynomial matrix on a batch of points -> array (npts, r, c)."""

    def __init__(self, mat: PolyMatrix):
        self.shape = mat.shape
        self.cells = [[CompiledPoly(p) for p in r] for r in mat.entries]

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.empty((pts.shape[0],) + self.shape)
        for i, r in enumerate(self.cells):
            for j, c in enumerate(r):
                out[:, i, j] = c(pts)
        return out


def jacobian(field: Sequence[Polynomial]) -> PolyMatrix:
    """Matrix of partial derivatives d f_i / d x_j.

    The states are the first ``len(field)`` variables; any trailing variables
    (external inputs) are treated as exogenous and not differentiated.
    """
    field = list(field)
    if not field:
        raise ValueError("empty vector field")
    n = len(field)
    if n > field[0].nvars:
        raise ValueError(f"field has {n} components for {field[0].nvars} variables")
    return PolyMatrix([[f.differentiate(j) for j in range(n)] for f in field])


def lie_derivative_matrix(M: PolyMatrix, field: Sequence[Polynomial]) -> PolyMatrix:
    """Time derivative of M(x) along x' = f(x): sum_k dM/dx_k * f_k."""
    field = list(field)
    if M.rows != M.cols:
        raise ValueError("metric must be square")
    if len(field) > len(M.names):
        raise ValueError("field length exceeds the variable count")
    exo = range(len(field), len(M.names))
    if any(m[k] for r in M.entries for p in r for m in p.terms for k in exo):
        raise ValueError("metric depends on a variable without dynamics")
    n = M.rows
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            p = M.entries[i][j]
            acc = Polynomial(p.names)
            for k, fk in enumerate(field):
                dp = p.differentiate(k)
                if dp.terms and fk.terms:
                    acc = acc + dp * fk
            out[i][j] = out[j][i] = acc
    return PolyMatrix(out, symmetric=M.symmetric)


def rate_matrix(M: PolyMatrix, field: Sequence[Polynomial], beta: float = 0.0) -> PolyMatrix:
    """J^T M + M J + dM/dt + beta M for the vector field ``field``."""
    J = jacobian(field)
    MJ = M @ J
    n = M.rows
    Mdot = lie_derivative_matrix(M, field)
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            e = MJ.entries[i][j] + MJ.entries[j][i] + Mdot.entries[i][j]
            if beta:
                e = e + M.entries[i][j] * beta
            out[i][j] = out[j][i] = e
    return PolyMatrix(out, symmetric=True)


# -- text form -----------------------------------------------------------------

def format_number(x) -> str:
    """Shortest decimal that round-trips the float, without exponent notation."""
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)
    return np.format_float_positional(float(x), unique=True, trim="-")


def format_polynomial(p: Polynomial, fmt: Callable | None = None) -> str:
    fmt = fmt or format_number
    if not p.terms:
        return "0"
    parts = []
    for mono, c in p.sorted_terms():
        factors = []
        for name, e in zip(p.names, mono):
            if e == 1:
                factors.append(name)
            elif e > 1:
                factors.append(f"{name}^{e}")
        neg = c < 0
        mag = -c if neg else c
        body = fmt(mag)
        if factors:
            body = "*".join(factors) if mag == 1 else body + "*" + "*".join(factors)
        if not parts:
            parts.append(("-" if neg else "") + body)
        else:
            parts.append((" - " if neg else " + ") + body)
    return "".join(parts)


class PolySyntaxError(ValueError):
    """Malformed polynomial text; carries a 1-based column."""

    def __init__(self, message: str, column: int):
        super().__init__(f"column {column}: {message}")
        self.column = column


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    pos = 0
    toks = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise PolySyntaxError(f"unexpected character {text[pos]!r}", pos + 1)
        kind = m.lastgroup
        toks.append((kind, m.group(kind), m.start(kind) + 1))
        pos = m.end()
    toks.append(("end", "", len(text) + 1))
    return toks


class _Parser:
    def __init__(self, text, names, constants):
        self.toks = _tokenize(text)
        self.i = 0
        self.names = tuple(names)
        self.constants = constants

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value):
        kind, val, col = self.take()
        if val != value:
            raise PolySyntaxError(f"expected {value!r}, got {val or 'end of input'!r}", col)

    def parse(self) -> Polynomial:
        p = self.expr()
        kind, val, col = self.peek()
        if kind != "end":
            raise PolySyntaxError(f"unexpected {val!r}", col)
        return p

    def expr(self):
        sign = 1
        kind, val, _ = self.peek()
        if val in "+-" and kind == "op":
            self.take()
            sign = -1 if val == "-" else 1
        acc = self.term() * sign
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                t = self.term()
                acc = acc + t if val == "+" else acc - t
            else:
                return acc

    def term(self):
        acc = self.power()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val == "*":
                self.take()
                acc = acc * self.power()
            else:
                return acc

    def power(self):
        base = self.atom()
        kind, val, col = self.peek()
        if kind == "op" and val == "^":
            self.take()
            k, v, c = self.take()
            if k != "num" or not v.isdigit():
                raise PolySyntaxError("exponent must be a non-negative integer literal", c)
            return base ** int(v)
        return base

    def atom(self):
        kind, val, col = self.take()
        if kind == "num":
            num = Fraction(val)
            k2, v2, c2 = self.peek()
            if k2 == "op" and v2 == "/":
                self.take()
                k3, v3, c3 = self.take()
                if k3 != "num" or not v3.isdigit() or not val.isdigit():
                    raise PolySyntaxError("ratios must be integer literals p/q", c3)
                if int(v3) == 0:
                    raise PolySyntaxError("division by zero", c3)
                num = Fraction(int(val), int(v3))
            return Polynomial.constant(self.names, num)
        if kind == "name":
            if val in self.names:
                e = [0] * len(self.names)
                e[self.names.index(val)] = 1
                return Polynomial(self.names, {tuple(e): Fraction(1)})
            if val in self.constants:
                return Polynomial.constant(self.names, Fraction(self.constants[val]))
            raise UndeclaredSymbol(val, col)
        if kind == "op" and val == "(":
            p = self.expr()
            self.expect(")")
            return p
        raise PolySyntaxError(f"unexpected {val or 'end of input'!r}", col)


class UndeclaredSymbol(PolySyntaxError):
    def __init__(self, name: str, column: int):
        super().__init__(f"undeclared symbol {name!r}", column)
        self.name = name


def parse_polynomial(text: str, names: Sequence[str], constants: dict | None = None,
                     exact: bool = False) -> Polynomial:
    """Parse the textual polynomial grammar.

    Terms are joined by ``+``/``-``; factors by ``*``; ``var^k`` raises to an
    integer power; parentheses are expanded; coefficients are decimals or
    integer ratios ``p/q``. Names in ``constants`` are replaced by their
    values. With ``exact=True`` the coefficients stay as Fractions.
    """
    p = _Parser(text, names, constants or {}).parse()
    return p if exact else p.to_float()


def polys_close(a: Polynomial, b: Polynomial, tol: float) -> bool:
    """Coefficientwise comparison with absolute tolerance."""
    keys = set(a.terms) | set(b.terms)
    return all(abs(float(a.terms.get(k, 0)) - float(b.terms.get(k, 0))) <= tol for k in keys)


def max_coef_diff(a: Polynomial, b: Polynomial) -> float:
    keys = set(a.terms) | set(b.terms)
    return max((abs(float(a.terms.get(k, 0)) - float(b.terms.get(k, 0))) for k in keys), default=0.0)


def matrices_close(A: PolyMatrix, B: PolyMatrix, tol: float) -> bool:
    return A.shape == B.shape and all(
        polys_close(a, b, tol) for ra, rb in zip(A.entries, B.entries) for a, b in zip(ra, rb)
    )


def field_function(field: Sequence[Polynomial]) -> Callable[[Sequence[float]], np.ndarray]:
    """Generate a fast scalar evaluator for a polynomial vector field."""
    field = list(field)
    n = field[0].nvars if field else 0
    exprs = []
    for f in field:
        parts = []
        for mono, c in f.terms.items():
            factors = [repr(float(c))]
            for i, e in enumerate(mono):
                if e == 1:
                    factors.append(f"x{i}")
                elif e > 1:
                    factors.append(f"x{i}**{e}")
            parts.append("*".join(factors))
        exprs.append(" + ".join(parts) if parts else "0.0")
    unpack = ", ".join(f"x{i}" for i in range(n))
    src = f"def _f(x):\n    {unpack}{',' if n == 1 else ''} = x\n    return [{', '.join(exprs)}]\n"
    ns: dict = {}
    exec(compile(src, "<field>", "exec"), ns)
    return ns["_f"]


__all__ = [
    "Polynomial", "PolyMatrix", "CompiledPoly", "CompiledMatrix", "jacobian",
    "lie_derivative_matrix", "rate_matrix", "parse_polynomial", "format_polynomial",
    "format_number", "monomials_upto", "grlex_key", "PolySyntaxError", "UndeclaredSymbol",
    "polys_close", "matrices_close", "max_coef_diff", "field_function",
]
