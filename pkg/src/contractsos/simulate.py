"""Fixed-step RK4 integration and the validation scenarios built on it."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .contraction import DynSystem, Param
from .polyalg import Polynomial

BLOWUP_NORM = 1e6
DEFAULT_DT = 1e-3
DEFAULT_T_END = 100.0


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    blew_up: bool = False
    names: tuple = ()

    def __post_init__(self):
        if self.states.shape[0] != self.times.shape[0]:
            raise ValueError("one state row per time sample required")

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def window(self, t0: float, t1: float = np.inf):
        mask = (self.times >= t0 - 1e-12) & (self.times <= t1 + 1e-12)
        return self.times[mask], self.states[mask]

    def at(self, t: float) -> np.ndarray:
        k = int(np.argmin(np.abs(self.times - t)))
        return self.states[k]

    def to_csv(self, path_or_file, every: int = 1, header: Sequence[str] = ()):
        """``format = 1`` line, ``#`` metadata, then ``t,x1,...,xn`` rows."""
        names = self.names or tuple(f"x{i + 1}" for i in range(self.states.shape[1]))
        lines = ["format = 1"] + [f"# {h}" for h in header]
        if self.blew_up:
            lines.append("# blew_up = 1")
        lines.append(",".join(("t",) + tuple(names)))
        for k in range(0, len(self.times), max(1, int(every))):
            row = [self.times[k]] + list(self.states[k])
            lines.append(",".join(repr(float(v)) for v in row))
        text = "\n".join(lines) + "\n"
        if hasattr(path_or_file, "write"):
            path_or_file.write(text)
        else:
            with open(path_or_file, "w") as fh:
                fh.write(text)


def rk4_step(fun: Callable, x: np.ndarray, dt: float) -> np.ndarray:
    k1 = np.asarray(fun(x))
    k2 = np.asarray(fun(x + 0.5 * dt * k1))
    k3 = np.asarray(fun(x + 0.5 * dt * k2))
    k4 = np.asarray(fun(x + dt * k3))
    return x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4(fun: Callable, x0, t_end: float, dt: float, names: Sequence[str] = ()) -> Trajectory:
    """Classical RK4 on ``x' = fun(x)``; stops early with a flag on blow-up."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_end < dt:
        raise ValueError("t_end must be at least dt")
    steps = int(round(t_end / dt))
    x = np.array(x0, dtype=float)
    out = np.empty((steps + 1, x.size))
    out[0] = x
    blew = False
    k = 0
    for k in range(1, steps + 1):
        x = rk4_step(fun, x, dt)
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > BLOWUP_NORM:
            blew = True
            break
        out[k] = x
    n = k if blew else steps + 1
    times = np.arange(n) * dt
    return Trajectory(times, out[:n].copy(), blew, tuple(names))


def integrate(sys: DynSystem, x0, t_end: float = DEFAULT_T_END, dt: float = DEFAULT_DT,
              params: dict | None = None) -> Trajectory:
    if len(x0) != sys.n:
        raise ValueError(f"initial state has {len(x0)} entries for {sys.n} states")
    f = sys.function(params)
    return rk4(lambda x: f(x), x0, t_end, dt, sys.states)


def build_unidirectional_coupling(alpha: float, omega: float, k: float, eta: float) -> DynSystem:
    """Master VdP oscillator x driving a copy y through alpha*eta*(x' - y').

    States (x1, x2, y1, y2); the damping of y absorbs the coupling term so
    y2' = -alpha (y1^2 + k + eta) y2 - omega^2 y1 + alpha eta x2.
    """
    if alpha <= 0 or omega <= 0:
        raise ValueError("alpha and omega must be positive")
    names = ("x1", "x2", "y1", "y2")
    x1, x2, y1, y2 = (Polynomial.variable(names, i) for i in range(4))
    w2 = omega * omega
    f = [
        x2,
        (x1 * x1 + k) * x2 * (-alpha) - x1 * w2,
        y2,
        (y1 * y1 + (k + eta)) * y2 * (-alpha) - y1 * w2 + x2 * (alpha * eta),
    ]
    return DynSystem(names, f, name=f"coupled-vdp(alpha={alpha:g},omega={omega:g},k={k:g},eta={eta:g})",
                     constants={"alpha": alpha, "omega": omega, "k": k, "eta": eta})


def driven_subsystem(alpha: float, omega: float, k: float, eta: float) -> DynSystem:
    """The y-half of the coupled pair with x2 as an external input (states y1, y2)."""
    names = ("y1", "y2", "u", )
    y1, y2, u = (Polynomial.variable(names, i) for i in range(3))
    f = [y2, (y1 * y1 + (k + eta)) * y2 * (-alpha) - y1 * (omega * omega) + u * (alpha * eta)]
    return DynSystem(("y1", "y2"), f, inputs=("u",), input_split=1, name="driven-vdp",
                     constants={"alpha": alpha, "omega": omega, "k": k, "eta": eta})


def sync_distance(traj: Trajectory) -> np.ndarray:
    """||(x1, x2) - (y1, y2)|| at every sample."""
    if traj.states.shape[1] != 4:
        raise ValueError("synchronisation distance needs the 4-state coupled system")
    d = traj.states[:, :2] - traj.states[:, 2:]
    return np.sqrt(np.sum(d * d, axis=1))


@dataclass
class SettleResult:
    settled: bool
    drift: float


def settle_check(traj: Trajectory, window: float, tol: float) -> SettleResult:
    """Settled iff every state varies by at most ``tol`` over the final window."""
    span = traj.times[-1] - traj.times[0]
    if window >= span:
        raise ValueError("window must be shorter than the trajectory")
    if traj.blew_up:
        return SettleResult(False, float("inf"))
    _, xs = traj.window(traj.times[-1] - window)
    drift = float(np.max(xs.max(axis=0) - xs.min(axis=0)))
    return SettleResult(drift <= tol, drift)


def _scan_job(args):
    sys, param, value, x0, t_end, dt, window, tol = args
    tr = integrate(sys, x0, t_end, dt, {param: value})
    res = settle_check(tr, window, tol)
    amp = float(np.max(np.abs(tr.window(tr.times[-1] - window)[1])))
    return value, res.settled, res.drift, amp, tr.blew_up


def parameter_scan(sys: DynSystem, param: str, values: Sequence[float], x0, t_end: float = DEFAULT_T_END,
                   dt: float = DEFAULT_DT, window: float = 10.0, tol: float = 1e-3, jobs: int = 1):
    """Settle check per parameter value, e.g. a Hopf scan; results in input order."""
    args = [(sys, param, float(v), tuple(x0), t_end, dt, window, tol) for v in values]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_scan_job, args))
    return [_scan_job(a) for a in args]


def jet_with_delta() -> DynSystem:
    """Jet-engine model with an additive perturbation on the first equation."""
    names = ("phi", "psi", "delta")
    phi, psi, d = (Polynomial.variable(names, i) for i in range(3))
    f = [-psi - phi * phi * 1.5 - phi * phi * phi * 0.5 + d, phi * 3.0 - psi]
    return DynSystem(("phi", "psi"), f, [Param("delta", 0.0)], name="jet-additive")


def phase_svg(traj: Trajectory, i: int = 0, j: int = 1, size: int = 400, title: str = "",
              header: Sequence[str] = ()) -> str:
    """Minimal SVG polyline of states ``i`` and ``j`` with axes through the origin."""
    xs, ys = traj.states[:, i], traj.states[:, j]
    lo_x, hi_x = float(min(xs.min(), 0.0)), float(max(xs.max(), 0.0))
    lo_y, hi_y = float(min(ys.min(), 0.0)), float(max(ys.max(), 0.0))
    pad = 20
    sx = (size - 2 * pad) / max(hi_x - lo_x, 1e-12)
    sy = (size - 2 * pad) / max(hi_y - lo_y, 1e-12)
    px = lambda v: pad + (v - lo_x) * sx  # noqa: E731
    py = lambda v: size - pad - (v - lo_y) * sy  # noqa: E731
    step = max(1, len(xs) // 4000)
    pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(xs[::step], ys[::step]))
    names = traj.names or tuple(f"x{k + 1}" for k in range(traj.states.shape[1]))
    meta = "".join(f"<!-- {h} -->\n" for h in ["format = 1", *header])
    return (
        f'<?xml version="1.0" encoding="UTF-8"?>\n{meta}'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">\n'
        f'<title>{title or names[i] + " vs " + names[j]}</title>\n'
        f'<line x1="{pad}" y1="{py(0):.2f}" x2="{size - pad}" y2="{py(0):.2f}" stroke="gray"/>\n'
        f'<line x1="{px(0):.2f}" y1="{pad}" x2="{px(0):.2f}" y2="{size - pad}" stroke="gray"/>\n'
        f'<text x="{size - pad}" y="{py(0) - 4:.2f}" text-anchor="end">{names[i]}</text>\n'
        f'<text x="{px(0) + 4:.2f}" y="{pad}">{names[j]}</text>\n'
        f'<polyline fill="none" stroke="black" points="{pts}"/>\n'
        "</svg>\n"
    )


__all__ = [
    "Trajectory", "rk4", "rk4_step", "integrate", "build_unidirectional_coupling", "driven_subsystem",
    "sync_distance", "settle_check", "SettleResult", "parameter_scan", "phase_svg",
    "jet_with_delta", "BLOWUP_NORM",
]
