"""Sampling checks of contraction certificates over state-space regions."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .contraction import DynSystem, MetricCertificate
from .polyalg import PolyMatrix, jacobian
from .simulate import rk4_step

DEFAULT_BOUND = 2.0
DEFAULT_GRID = 21
DEFAULT_SAMPLES = 1000
DEFAULT_SEED = 20240101
F_ZERO = 1e-9
BALL_RADIUS = 1e-3


@dataclass
class Region:
    """Axis-aligned box sampled on a grid plus seeded uniform random points."""

    names: tuple
    lower: tuple
    upper: tuple
    grid: int = DEFAULT_GRID
    samples: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        self.names, self.lower, self.upper = tuple(self.names), tuple(map(float, self.lower)), tuple(map(float, self.upper))
        if not len(self.names) == len(self.lower) == len(self.upper):
            raise ValueError("one interval per variable required")
        if any(lo > hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("lower bound above upper bound")
        if self.grid < 2:
            raise ValueError("grid needs at least 2 points per axis")
        if self.samples < 0:
            raise ValueError("sample count must be non-negative")

    @classmethod
    def box(cls, names: Sequence[str], bound: float = DEFAULT_BOUND, **kw) -> "Region":
        return cls(tuple(names), (-bound,) * len(names), (bound,) * len(names), **kw)

    @classmethod
    def parse(cls, names: Sequence[str], text: str, **kw) -> "Region":
        """``"-2:2"`` for every axis, ``"-2:2,-1:1"`` per axis; a bare ``b`` means ``-b:b``."""
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if len(parts) == 1:
            parts = parts * len(names)
        if len(parts) != len(names):
            raise ValueError(f"region gives {len(parts)} intervals for {len(names)} variables")
        lo, hi = [], []
        for p in parts:
            a, sep, b = p.partition(":")
            if not sep:
                try:
                    a, b = -abs(float(p)), abs(float(p))
                except ValueError:
                    raise ValueError(f"interval {p!r} must look like lo:hi or a bound b") from None
            lo.append(float(a))
            hi.append(float(b))
        return cls(tuple(names), tuple(lo), tuple(hi), **kw)

    @property
    def dim(self) -> int:
        return len(self.names)

    def points(self) -> np.ndarray:
        """Grid points in lexicographic order followed by the random samples."""
        axes = [np.linspace(lo, hi, self.grid) for lo, hi in zip(self.lower, self.upper)]
        grid = np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, self.dim)
        rng = np.random.default_rng(self.seed)
        rand = rng.uniform(self.lower, self.upper, size=(self.samples, self.dim))
        return np.vstack([grid, rand])

    def describe(self) -> str:
        iv = ", ".join(f"{n} in [{lo:g}, {hi:g}]" for n, lo, hi in zip(self.names, self.lower, self.upper))
        return f"{iv}; grid {self.grid} per axis; {self.samples} random samples; seed {self.seed}"


def _pick(values: np.ndarray, pts: np.ndarray, worst_is_max: bool) -> int:
    """Index of the extremum; ties go to the lexicographically smallest point."""
    target = values.max() if worst_is_max else values.min()
    idx = np.flatnonzero(values == target)
    if idx.size == 1:
        return int(idx[0])
    sub = pts[idx]
    order = np.lexsort(sub.T[::-1])
    return int(idx[order[0]])


@dataclass
class EigenBounds:
    min_eig_M: float
    max_eig_R: float
    worst_M: np.ndarray
    worst_R: np.ndarray
    npoints: int
    points: np.ndarray = field(repr=False, default=None)
    eig_M: np.ndarray = field(repr=False, default=None)
    eig_R: np.ndarray = field(repr=False, default=None)

    def passes(self, eps: float, semi: bool = False, slack: float = 1e-7) -> bool:
        if semi:
            return self.min_eig_M > 0 and self.max_eig_R <= slack
        return self.min_eig_M >= eps / 2 and self.max_eig_R <= -eps / 2


def _check_dims(M: PolyMatrix, region: Region):
    if tuple(M.names) != tuple(region.names):
        raise ValueError(f"region variables {region.names} differ from metric variables {M.names}")


def eigen_bounds(M: PolyMatrix, R: PolyMatrix, region: Region) -> EigenBounds:
    """Extreme eigenvalues of M (smallest) and R (largest) over the region samples."""
    _check_dims(M, region)
    pts = region.points()
    lm = np.linalg.eigvalsh(M.compiled()(pts))[:, 0]
    lr = np.linalg.eigvalsh(R.compiled()(pts))[:, -1]
    i = _pick(lm, pts, worst_is_max=False)
    j = _pick(lr, pts, worst_is_max=True)
    return EigenBounds(float(lm[i]), float(lr[j]), pts[i].copy(), pts[j].copy(), len(pts), pts, lm, lr)


def sample_eigen_bounds(cert: MetricCertificate, region: Region | None = None) -> EigenBounds:
    region = region or Region.box(cert.M.names)
    return eigen_bounds(cert.M, cert.R, region)


def symmetric_part_max_eig(sys: DynSystem, region: Region | None = None, params: dict | None = None) -> float:
    """Largest eigenvalue of (J + J^T)/2 over the region: the identity-metric test."""
    region = region or Region.box(sys.space)
    if tuple(region.names) != tuple(sys.space):
        raise ValueError("region variables differ from the system variables")
    J = jacobian(sys.field_at(params)).compiled()(region.points())
    S = 0.5 * (J + np.transpose(J, (0, 2, 1)))
    return float(np.linalg.eigvalsh(S)[:, -1].max())


@dataclass
class DisplacementPair:
    start: np.ndarray
    displacement: np.ndarray

    def __post_init__(self):
        self.start = np.asarray(self.start, dtype=float)
        self.displacement = np.asarray(self.displacement, dtype=float)
        if self.start.shape != self.displacement.shape:
            raise ValueError("start and displacement must have the same length")
        if not np.any(self.displacement):
            raise ValueError("displacement must be nonzero")


class ShrinkError(RuntimeError):
    """The displacement collapsed below what double precision can resolve."""


@dataclass
class RateCheck:
    max_rel_error: float
    rescales: int
    times: np.ndarray = field(repr=False, default=None)
    quadratic: np.ndarray = field(repr=False, default=None)
    predicted: np.ndarray = field(repr=False, default=None)
    measured: np.ndarray = field(repr=False, default=None)

    @property
    def decreasing(self) -> bool:
        """d/dt (dx^T M dx) < 0 at every checked sample."""
        return bool(np.all(self.measured < 0))


def rate_of_change_check(sys: DynSystem, cert: MetricCertificate, pair: DisplacementPair,
                         t_end: float = 2.0, dt: float = 1e-3, grow: float = 10.0) -> RateCheck:
    """Compare d/dt(dx^T M dx) along a trajectory pair with dx^T (R - beta M) dx.

    The derivative is a central difference over consecutive samples of the
    same pair; when the displacement grows or shrinks by ``grow`` it is
    rescaled to its initial size, which starts a new segment.
    """
    if sys.inputs:
        raise ValueError("rate check needs an autonomous system")
    if dt <= 0 or t_end < 2 * dt:
        raise ValueError("need dt > 0 and t_end >= 2 dt")
    f = sys.function(cert.params)
    Mc = cert.M.compiled()
    Pc = (cert.R - cert.M.scale(cert.beta)).compiled() if cert.beta else cert.R.compiled()
    x = pair.start.copy()
    d0 = float(np.linalg.norm(pair.displacement))
    dx = pair.displacement.copy()
    floor = 1e3 * np.finfo(float).eps
    steps = int(round(t_end / dt))
    seg_t, seg_q, seg_p = [], [], []
    all_t, all_q, all_meas, all_pred = [], [], [], []
    rescales = 0

    def flush():
        if len(seg_t) >= 3:
            q = np.array(seg_q)
            meas = (q[2:] - q[:-2]) / (2 * dt)
            all_t.extend(seg_t[1:-1])
            all_q.extend(q[1:-1])
            all_meas.extend(meas)
            all_pred.extend(seg_p[1:-1])
        seg_t.clear(), seg_q.clear(), seg_p.clear()

    for k in range(steps + 1):
        nx = float(np.linalg.norm(dx))
        if nx <= floor * max(1.0, float(np.linalg.norm(x))):
            raise ShrinkError(f"displacement norm {nx:.3g} lost in roundoff at t = {k * dt:g}")
        if nx > grow * d0 or nx < d0 / grow:
            flush()
            dx *= d0 / nx
            rescales += 1
        seg_t.append(k * dt)
        seg_q.append(float(dx @ Mc(x)[0] @ dx))
        seg_p.append(float(dx @ Pc(x)[0] @ dx))
        if k == steps:
            break
        y = rk4_step(f, x + dx, dt)
        x = rk4_step(f, x, dt)
        dx = y - x
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(dx))):
            raise FloatingPointError("trajectory left the finite range")
    flush()
    pred = np.array(all_pred)
    meas = np.array(all_meas)
    scale = np.maximum(np.abs(pred), 1e-6 * np.abs(pred).max(initial=0.0) + 1e-300)
    rel = np.abs(meas - pred) / scale
    return RateCheck(float(rel.max(initial=0.0)), rescales, np.array(all_t), np.array(all_q), pred, meas)


@dataclass
class LyapunovCheck:
    min_V: float
    max_Vdot_plus_beta_V: float
    npoints: int
    excluded: int

    def passes(self, slack: float = 1e-9) -> bool:
        return self.min_V > 0 and self.max_Vdot_plus_beta_V <= slack


def lyapunov_check(sys: DynSystem, cert: MetricCertificate, region: Region | None = None) -> LyapunovCheck:
    """Sample V = f^T M f and its derivative f^T (R - beta M) f.

    Points within ``BALL_RADIUS`` of a sample where ||f|| < ``F_ZERO`` are
    excluded from the V > 0 test (V vanishes at equilibria).
    """
    if sys.inputs:
        raise ValueError("Lyapunov check needs an autonomous system")
    region = region or Region.box(cert.M.names)
    _check_dims(cert.M, region)
    pts = region.points()
    fld = sys.field_at(cert.params)
    F = np.stack([p.compiled()(pts) for p in fld], axis=1)
    Mv = cert.M.compiled()(pts)
    Rv = cert.R.compiled()(pts)
    V = np.einsum("ni,nij,nj->n", F, Mv, F)
    W = np.einsum("ni,nij,nj->n", F, Rv, F)  # = Vdot + beta V
    fn = np.linalg.norm(F, axis=1)
    eq = pts[fn < F_ZERO]
    keep = np.ones(len(pts), dtype=bool)
    for e in eq:
        keep &= np.linalg.norm(pts - e, axis=1) > BALL_RADIUS
    min_v = float(V[keep].min()) if keep.any() else float("inf")
    return LyapunovCheck(min_v, float(W.max()), len(pts), int((~keep).sum()))


def format_report(cert: MetricCertificate, region: Region, bounds: EigenBounds,
                  lyap: LyapunovCheck | None = None, header: Sequence[str] = ()) -> str:
    vec = lambda v: " ".join(repr(float(a)) for a in v)  # noqa: E731
    ok = bounds.passes(cert.eps, cert.semi)
    lines = ["format = 1", *[f"# {h}" for h in header],
             f"system = {cert.system}",
             f"degree = {cert.degree}",
             f"eps = {cert.eps!r}",
             f"beta = {cert.beta!r}",
             f"semi = {int(cert.semi)}",
             f"region = {region.describe()}",
             f"points = {bounds.npoints}",
             f"min_eig_M = {bounds.min_eig_M!r}",
             f"min_eig_M_at = {vec(bounds.worst_M)}",
             f"max_eig_R = {bounds.max_eig_R!r}",
             f"max_eig_R_at = {vec(bounds.worst_R)}"]
    if lyap is not None:
        lines += [f"min_V = {lyap.min_V!r}", f"max_Vdot_plus_beta_V = {lyap.max_Vdot_plus_beta_V!r}",
                  f"lyapunov_ok = {int(lyap.passes())}"]
    lines.append(f"eigen_ok = {int(ok)}")
    return "\n".join(lines) + "\n"


def write_csv(path, region: Region, bounds: EigenBounds, header: Sequence[str] = ()):
    with open(path, "w") as fh:
        fh.write("format = 1\n")
        for h in header:
            fh.write(f"# {h}\n")
        fh.write(",".join(list(region.names) + ["min_eig_M", "max_eig_R"]) + "\n")
        for p, a, b in zip(bounds.points, bounds.eig_M, bounds.eig_R):
            fh.write(",".join(repr(float(v)) for v in (*p, a, b)) + "\n")


__all__ = [
    "Region", "EigenBounds", "eigen_bounds", "sample_eigen_bounds", "symmetric_part_max_eig",
    "DisplacementPair", "ShrinkError", "RateCheck", "rate_of_change_check", "LyapunovCheck",
    "lyapunov_check", "format_report", "write_csv",
]
