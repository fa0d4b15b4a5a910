"""System-definition files.

A definition is line oriented; ``#`` starts a comment::

    format = 1
    name = jet-additive
    [states]
    phi psi
    [constants]
    a = 3/2
    [params]
    delta 0 -2 2          # name nominal [lower upper]
    [inputs]
    u split = 1           # inputs enter equations after the first one
    [dynamics]
    phi' = -psi - a*phi^2 - 1/2*phi^3 + delta
    psi' = 3*phi - psi
    [scenario]
    x0 = 0.5 0.5          # default initial state(s) for simulation
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .contraction import DynSystem, NonAffineParameter, Param
from .polyalg import PolySyntaxError, UndeclaredSymbol, parse_polynomial

SECTIONS = ("states", "constants", "params", "inputs", "dynamics", "scenario")
_NAME = re.compile(r"[A-Za-z_][A-Za-z_0-9]*$")


class SystemFileError(ValueError):
    """Problem in a definition file, located by 1-based line and column."""

    kind = "syntax error"

    def __init__(self, message: str, line: int, column: int = 1, path: str = "<string>"):
        self.line, self.column, self.path, self.message = line, column, path, message
        super().__init__(f"{path}:{line}:{column}: {self.kind}: {message}")


class UndeclaredSymbolError(SystemFileError):
    kind = "undeclared symbol"


class NonAffineParameterError(SystemFileError):
    kind = "non-affine parameter"


@dataclass
class SystemDefinition:
    system: DynSystem
    scenario: dict = field(default_factory=dict)

    def initial_states(self) -> list:
        """Initial states listed by ``x0`` lines (several allowed)."""
        return list(self.scenario.get("x0", []))


def _number(text: str, line: int, col: int, path: str) -> float:
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise SystemFileError(f"expected a number, got {text.strip()!r}", line, col, path) from None


def _col(raw: str, token: str) -> int:
    return raw.find(token) + 1 if token in raw else 1


def loads_definition(text: str, path: str = "<string>") -> SystemDefinition:
    section = None
    seen: set = set()
    name = Path(path).stem if path != "<string>" else "system"
    states: list = []
    constants: dict = {}
    params: list = []
    inputs: list = []
    split = None
    equations: dict = {}
    scenario: dict = {"x0": []}
    section_lines: dict = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        s = line.strip()
        if s.startswith("["):
            if not s.endswith("]") or s[1:-1].strip() not in SECTIONS:
                raise SystemFileError(f"unknown section {s!r}", ln, _col(raw, s), path)
            section = s[1:-1].strip()
            if section in seen:
                raise SystemFileError(f"section [{section}] repeated", ln, _col(raw, s), path)
            seen.add(section)
            section_lines[section] = ln
            continue
        if section is None:
            key, sep, val = s.partition("=")
            key = key.strip()
            if not sep:
                raise SystemFileError("expected key = value before the first section", ln, 1, path)
            if key == "format":
                if val.strip() != "1":
                    raise SystemFileError(f"unsupported format {val.strip()!r}", ln, _col(raw, val.strip()), path)
            elif key == "name":
                name = val.strip()
            else:
                raise SystemFileError(f"unknown header key {key!r}", ln, _col(raw, key), path)
        elif section == "states":
            for tok in s.split():
                if not _NAME.match(tok):
                    raise SystemFileError(f"bad state name {tok!r}", ln, _col(raw, tok), path)
                states.append(tok)
        elif section == "constants":
            key, sep, val = s.partition("=")
            key = key.strip()
            if not sep or not _NAME.match(key):
                raise SystemFileError("expected name = value", ln, 1, path)
            constants[key] = _number(val, ln, _col(raw, val.strip()), path)
        elif section == "params":
            toks = s.split()
            if len(toks) not in (2, 4) or not _NAME.match(toks[0]):
                raise SystemFileError("expected: name nominal [lower upper]", ln, 1, path)
            vals = [_number(t, ln, _col(raw, t), path) for t in toks[1:]]
            lo, hi = (vals[1], vals[2]) if len(vals) == 3 else (None, None)
            if lo is not None and not lo <= vals[0] <= hi:
                raise SystemFileError("nominal value outside the bounds", ln, _col(raw, toks[1]), path)
            params.append(Param(toks[0], vals[0], lo, hi))
        elif section == "inputs":
            m = re.match(r"^(.*?)\bsplit\s*=\s*(\d+)\s*$", s)
            names = m.group(1) if m else s
            if m:
                split = int(m.group(2))
            for tok in names.split():
                if not _NAME.match(tok):
                    raise SystemFileError(f"bad input name {tok!r}", ln, _col(raw, tok), path)
                inputs.append(tok)
        elif section == "dynamics":
            m = re.match(r"^\s*([A-Za-z_][A-Za-z_0-9]*)\s*'\s*=(.*)$", line)
            if not m:
                raise SystemFileError("expected  state' = polynomial", ln, 1, path)
            lhs, rhs = m.group(1), m.group(2)
            if lhs not in states:
                raise UndeclaredSymbolError(f"{lhs!r} is not a declared state", ln, m.start(1) + 1, path)
            if lhs in equations:
                raise SystemFileError(f"second equation for {lhs!r}", ln, m.start(1) + 1, path)
            equations[lhs] = (rhs, ln, m.start(2))
        elif section == "scenario":
            key, sep, val = s.partition("=")
            key = key.strip()
            if not sep:
                raise SystemFileError("expected key = value", ln, 1, path)
            nums = [_number(t, ln, _col(raw, t), path) for t in val.replace(",", " ").split()]
            if key == "x0":
                scenario["x0"].append(nums)
            elif len(nums) == 1:
                scenario[key] = nums[0]
            else:
                raise SystemFileError(f"scenario key {key!r} takes one number", ln, 1, path)

    if not states:
        raise SystemFileError("no [states] declared", 1, 1, path)
    all_names = states + inputs + [p.name for p in params]
    dup = {n for n in all_names if all_names.count(n) > 1} | (set(all_names) & set(constants))
    if dup:
        raise SystemFileError(f"symbol(s) declared twice: {', '.join(sorted(dup))}", 1, 1, path)
    missing = [s for s in states if s not in equations]
    if missing:
        raise SystemFileError(f"no equation for state(s) {', '.join(missing)}",
                              section_lines.get("dynamics", 1), 1, path)
    for x0 in scenario["x0"]:
        if len(x0) != len(states):
            raise SystemFileError(f"x0 needs {len(states)} entries", 1, 1, path)

    field_polys = []
    n_space = len(states) + len(inputs)
    for st in states:
        rhs, ln, off = equations[st]
        try:
            poly = parse_polynomial(rhs, all_names, constants)
        except UndeclaredSymbol as e:
            raise UndeclaredSymbolError(f"{e.name!r}", ln, off + e.column, path) from None
        except PolySyntaxError as e:
            raise SystemFileError(str(e).split(": ", 1)[-1], ln, off + e.column, path) from None
        for mono in poly.terms:
            if sum(mono[n_space:]) > 1:
                bad = [all_names[i] for i in range(n_space, len(mono)) if mono[i]]
                col = min(_col(rhs, b) for b in bad)
                raise NonAffineParameterError(
                    f"equation for {st!r} is not affine in {', '.join(bad)}", ln, off + col, path)
        field_polys.append(poly)
    try:
        sys = DynSystem(states, field_polys, params, inputs, split, name, constants)
    except NonAffineParameter as e:  # pragma: no cover - caught per equation above
        raise NonAffineParameterError(str(e), 1, 1, path) from None
    except ValueError as e:
        raise SystemFileError(str(e), 1, 1, path) from None
    return SystemDefinition(sys, scenario)


def load_definition(path) -> SystemDefinition:
    path = str(path)
    with open(path) as fh:
        return loads_definition(fh.read(), path)


def parse_system(path) -> DynSystem:
    return load_definition(path).system


def data_path(name: str) -> Path:
    """Path of a bundled example definition (``jet`` -> ``data/jet.sys``)."""
    p = Path(__file__).with_name("data") / (name if name.endswith(".sys") else name + ".sys")
    if not p.exists():
        raise FileNotFoundError(f"no bundled system {name!r}")
    return p


def bundled_systems() -> list:
    return sorted(p.stem for p in (Path(__file__).with_name("data")).glob("*.sys"))


__all__ = [
    "SystemFileError", "UndeclaredSymbolError", "NonAffineParameterError", "SystemDefinition",
    "loads_definition", "load_definition", "parse_system", "data_path", "bundled_systems",
]
