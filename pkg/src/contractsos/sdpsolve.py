"""Dense block semidefinite programs and a homogeneous self-dual interior point solver.

Problem form (primal)::

    minimise    c_f . x_f + sum_b <C_b, X_b>
    subject to  A_f x_f + sum_b A_b(X_b) = b,   X_b PSD,  x_f free

Row ``i`` of ``A_b`` is a symmetric matrix; ``A_b(X)_i = <A_b[i], X>``.
The solver embeds primal and dual in one homogeneous self-dual system with
extra scalars ``tau`` and ``kappa``: ``tau > 0`` at the limit means an optimal
pair was found, ``kappa > 0`` means a Farkas certificate of primal or dual
infeasibility. Iterations use Nesterov-Todd scaling and a Mehrotra
predictor-corrector step.
"""

from __future__ import annotations

import enum
import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla


class Status(str, enum.Enum):
    FEASIBLE = "Feasible"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    DUAL_INFEASIBLE = "DualInfeasible"
    INACCURATE = "Inaccurate"
    FAILED = "Failed"

    def __str__(self):
        return self.value


@dataclass
class BlockRows:
    """Constraint rows touching one PSD block: row indices and their symmetric matrices."""

    rows: np.ndarray  # (k,) int
    mats: np.ndarray  # (k, n, n) symmetric


class SdpProblem:
    """Block-diagonal SDP with an optional free-variable block.

    ``blocks`` lists PSD block sizes. Constraint data is stored densely per
    block; :meth:`from_triplets` builds it from lower-triangle triplets.
    """

    def __init__(self, block_dims: Sequence[int], free_dim: int, b, a_free,
                 a_blocks: Sequence[BlockRows], c_free=None, c_blocks=None):
        self.block_dims = [int(n) for n in block_dims]
        self.free_dim = int(free_dim)
        self.b = np.asarray(b, dtype=float)
        self.m = self.b.size
        self.a_free = np.zeros((self.m, self.free_dim)) if a_free is None else np.asarray(a_free, float)
        self.a_blocks = list(a_blocks)
        self.c_free = np.zeros(self.free_dim) if c_free is None else np.asarray(c_free, float)
        self.c_blocks = [np.zeros((n, n)) for n in self.block_dims] if c_blocks is None \
            else [np.asarray(c, float) for c in c_blocks]
        self.layout = None  # filled by sosprog.compile
        self._validate()

    def _validate(self):
        if self.a_free.shape != (self.m, self.free_dim):
            raise ValueError("free-block matrix has the wrong shape")
        if len(self.a_blocks) != len(self.block_dims):
            raise ValueError("one BlockRows entry per PSD block required")
        for n, br in zip(self.block_dims, self.a_blocks):
            if br.mats.shape[1:] != (n, n) or br.mats.shape[0] != br.rows.size:
                raise ValueError("block rows do not match the block size")
            if br.rows.size and (br.rows.min() < 0 or br.rows.max() >= self.m):
                raise ValueError("constraint row out of range")
        for n, c in zip(self.block_dims, self.c_blocks):
            if c.shape != (n, n):
                raise ValueError("objective block has the wrong shape")

    @classmethod
    def from_triplets(cls, block_dims, free_dim, b, entries, c_entries=()):
        """Build from sparse entries.

        ``entries`` holds ``(row, block, i, j, value)`` where ``block`` is
        ``None`` for the free block (then ``i`` is the variable index and
        ``j`` is ignored). Block entries address the lower triangle
        (``i >= j``) and stand for both symmetric positions. ``c_entries``
        uses ``(block, i, j, value)`` the same way.
        """
        b = np.asarray(b, float)
        m = b.size
        a_free = np.zeros((m, free_dim))
        per_block: list[dict] = [dict() for _ in block_dims]
        for row, blk, i, j, v in entries:
            if blk is None:
                a_free[row, i] += v
                continue
            if i < j:
                raise ValueError("block entries must address the lower triangle")
            n = block_dims[blk]
            mat = per_block[blk].setdefault(row, np.zeros((n, n)))
            mat[i, j] += v
            if i != j:
                mat[j, i] += v
        a_blocks = []
        for n, d in zip(block_dims, per_block):
            rows = np.array(sorted(d), dtype=int)
            mats = np.array([d[r] for r in rows]) if rows.size else np.zeros((0, n, n))
            a_blocks.append(BlockRows(rows, mats))
        c_free = np.zeros(free_dim)
        c_blocks = [np.zeros((n, n)) for n in block_dims]
        for blk, i, j, v in c_entries:
            if blk is None:
                c_free[i] += v
            else:
                c_blocks[blk][i, j] += v
                if i != j:
                    c_blocks[blk][j, i] += v
        return cls(block_dims, free_dim, b, a_free, a_blocks, c_free, c_blocks)

    def triplets(self):
        """Inverse of :meth:`from_triplets` (entries with |v| > 0)."""
        out = []
        rr, cc = np.nonzero(self.a_free)
        for r, c in zip(rr, cc):
            out.append((int(r), None, int(c), 0, float(self.a_free[r, c])))
        for k, br in enumerate(self.a_blocks):
            for r, mat in zip(br.rows, br.mats):
                ii, jj = np.nonzero(np.tril(mat))
                for i, j in zip(ii, jj):
                    out.append((int(r), k, int(i), int(j), float(mat[i, j])))
        out.sort(key=lambda t: (t[0], -1 if t[1] is None else t[1], t[2], t[3]))
        return out

    # -- linear maps ----------------------------------------------------------
    def apply(self, x_free, blocks) -> np.ndarray:
        """A_f x_f + sum_b A_b(X_b)."""
        out = self.a_free @ x_free
        for br, X in zip(self.a_blocks, blocks):
            if br.rows.size:
                np.add.at(out, br.rows, br.mats.reshape(br.rows.size, -1) @ X.ravel())
        return out

    def adjoint_blocks(self, y) -> list[np.ndarray]:
        """A_b^*(y) for every block."""
        out = []
        for n, br in zip(self.block_dims, self.a_blocks):
            if br.rows.size:
                out.append(np.tensordot(y[br.rows], br.mats, axes=1))
            else:
                out.append(np.zeros((n, n)))
        return out

    def objective(self, x_free, blocks) -> float:
        return float(self.c_free @ x_free + sum(np.vdot(C, X) for C, X in zip(self.c_blocks, blocks)))

    # -- text dump --------------------------------------------------------------
    def dump(self, path):
        """Write the line-oriented sparse-triplet form."""
        with open(path, "w") as fh:
            fh.write(self.dumps())

    def dumps(self) -> str:
        lines = ["format = 1", "blocks = " + " ".join(map(str, self.block_dims)),
                 f"free = {self.free_dim}", f"rows = {self.m}"]
        for i, v in enumerate(self.b):
            if v:
                lines.append(f"b {i} {float(v)!r}")
        for j, v in enumerate(self.c_free):
            if v:
                lines.append(f"c F {j} {float(v)!r}")
        for k, C in enumerate(self.c_blocks):
            ii, jj = np.nonzero(np.tril(C))
            for i, j in zip(ii, jj):
                lines.append(f"c {k} {i} {j} {float(C[i, j])!r}")
        for r, blk, i, j, v in self.triplets():
            if blk is None:
                lines.append(f"a {r} F {i} {float(v)!r}")
            else:
                lines.append(f"a {r} {blk} {i} {j} {float(v)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "SdpProblem":
        head, entries, c_entries, bvals = {}, [], [], {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" in line:
                k, v = (s.strip() for s in line.split("=", 1))
                head[k] = v
                continue
            tok = line.split()
            if tok[0] == "b":
                bvals[int(tok[1])] = float(tok[2])
            elif tok[0] == "c":
                if tok[1] == "F":
                    c_entries.append((None, int(tok[2]), 0, float(tok[3])))
                else:
                    c_entries.append((int(tok[1]), int(tok[2]), int(tok[3]), float(tok[4])))
            elif tok[0] == "a":
                if tok[2] == "F":
                    entries.append((int(tok[1]), None, int(tok[3]), 0, float(tok[4])))
                else:
                    entries.append((int(tok[1]), int(tok[2]), int(tok[3]), int(tok[4]), float(tok[5])))
            else:
                raise ValueError(f"unrecognised line {line!r}")
        dims = [int(s) for s in head.get("blocks", "").split()]
        m = int(head["rows"])
        b = np.zeros(m)
        for i, v in bvals.items():
            b[i] = v
        return cls.from_triplets(dims, int(head["free"]), b, entries, c_entries)


@dataclass
class SdpSolution:
    status: Status
    feasibility_ratio: float
    x_free: np.ndarray
    blocks: list
    y: np.ndarray
    dual_blocks: list
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int
    solve_time: float
    tau: float = 1.0
    kappa: float = 0.0
    certificate: np.ndarray | None = None  # Farkas ray for PrimalInfeasible (b.y = 1)
    history: list = field(default_factory=list)
    message: str = ""

    @property
    def pinf(self) -> int:
        return int(self.status == Status.PRIMAL_INFEASIBLE)

    @property
    def dinf(self) -> int:
        return int(self.status == Status.DUAL_INFEASIBLE)

    @property
    def numerr(self) -> int:
        return {Status.INACCURATE: 1, Status.FAILED: 2}.get(self.status, 0)

    def summary(self) -> dict:
        return {
            "status": str(self.status),
            "feasibility_ratio": round(self.feasibility_ratio, 6),
            "pinf": self.pinf,
            "dinf": self.dinf,
            "numerr": self.numerr,
            "iterations": self.iterations,
            "primal_residual": float(f"{self.primal_residual:.3e}"),
            "dual_residual": float(f"{self.dual_residual:.3e}"),
            "gap": float(f"{self.gap:.3e}"),
        }


@dataclass
class Settings:
    tol: float = 1e-8
    max_iter: int = 100
    loose_tol: float = 1e-5
    step: float = 0.99


class _Singular(Exception):
    pass


def _nt_scaling(X, S):
    """Return (R, lam) with R^T S R = diag(lam) = R^{-1} X R^{-T}."""
    Lx = np.linalg.cholesky(X)
    Ls = np.linalg.cholesky(S)
    U, d, Vt = np.linalg.svd(Ls.T @ Lx)
    R = (Lx @ Vt.T) / np.sqrt(d)
    return R, d


def _max_step(lam, dtil):
    """Largest a with diag(lam) + a * dtil PSD (inf if unbounded)."""
    isq = 1.0 / np.sqrt(lam)
    T = dtil * isq[:, None] * isq[None, :]
    emin = np.linalg.eigvalsh((T + T.T) / 2)[0]
    return math.inf if emin >= 0 else -1.0 / emin


def solve(prob: SdpProblem, tol: float = 1e-8, max_iter: int = 100,
          settings: Settings | None = None) -> SdpSolution:
    """Solve ``prob`` via the homogeneous self-dual embedding."""
    st = settings or Settings(tol=tol, max_iter=max_iter)
    t0 = time.perf_counter()
    dims = prob.block_dims
    nb = len(dims)
    m, nf = prob.m, prob.free_dim
    b, cf, Af, C = prob.b, prob.c_free, prob.a_free, prob.c_blocks

    X = [np.eye(n) for n in dims]
    S = [np.eye(n) for n in dims]
    xf = np.zeros(nf)
    y = np.zeros(m)
    tau, kappa = 1.0, 1.0
    ncone = sum(dims) + 1
    bnorm = max(1.0, np.linalg.norm(b))
    cnorm = max(1.0, math.sqrt(np.linalg.norm(cf) ** 2 + sum(np.linalg.norm(c) ** 2 for c in C)))

    block_row_mask = np.zeros(m, bool)
    for br in prob.a_blocks:
        block_row_mask[br.rows] = True
    rows_B = np.nonzero(block_row_mask)[0]
    rows_F = np.nonzero(~block_row_mask)[0]
    posB = -np.ones(m, int)
    posB[rows_B] = np.arange(rows_B.size)

    history = []
    status = None
    message = ""
    best = None
    it = 0
    stall = 0

    def residuals():
        Lp = Af @ xf + prob.apply(np.zeros(nf), X) - b * tau
        Lf = -Af.T @ y + cf * tau
        AsY = prob.adjoint_blocks(y)
        Ld = [-a - s + c * tau for a, s, c in zip(AsY, S, C)]
        cx = float(cf @ xf + sum(np.vdot(c, x) for c, x in zip(C, X)))
        by = float(b @ y)
        Lg = by - cx - kappa
        return Lp, Lf, Ld, Lg, cx, by, AsY

    while True:
        Lp, Lf, Ld, Lg, cx, by, AsY = residuals()
        xs = sum(np.vdot(x, s) for x, s in zip(X, S))
        mu = (xs + tau * kappa) / ncone
        pres = np.linalg.norm(Lp) / tau / bnorm
        dres = math.sqrt(np.linalg.norm(Lf) ** 2 + sum(np.linalg.norm(d) ** 2 for d in Ld)) / tau / cnorm
        pobj, dobj = cx / tau, by / tau
        gap = xs / tau ** 2
        relgap = gap / max(1.0, abs(pobj), abs(dobj))
        # infeasibility measures
        pinfres = math.inf
        if by > 0:
            ray_res = math.sqrt(np.linalg.norm(Af.T @ y) ** 2
                                + sum(np.linalg.norm(a + s) ** 2 for a, s in zip(AsY, S)))
            pinfres = ray_res / by
        dinfres = math.inf
        if cx < 0:
            dinfres = np.linalg.norm(Af @ xf + prob.apply(np.zeros(nf), X)) / (-cx)
        history.append({"iter": it, "mu": mu, "pres": pres, "dres": dres, "gap": gap,
                        "tau": tau, "kappa": kappa, "pinfres": pinfres})

        if pres <= st.tol and dres <= st.tol and min(gap, relgap) <= st.tol:
            status = Status.FEASIBLE
            break
        if pinfres <= st.tol:
            status = Status.PRIMAL_INFEASIBLE
            break
        if dinfres <= st.tol:
            status = Status.DUAL_INFEASIBLE
            break
        score = max(pres, dres, min(gap, relgap))
        if best is None or score < best[0]:
            best = (score,)
        if it >= st.max_iter:
            message = "iteration limit"
            break

        try:
            scal = [_nt_scaling(x, s) for x, s in zip(X, S)]
        except np.linalg.LinAlgError:
            message = "lost positive definiteness"
            break
        Rs = [r for r, _ in scal]
        lams = [l for _, l in scal]
        Ws = [r @ r.T for r in Rs]

        # Schur complement on rows that touch PSD blocks
        MB = np.zeros((rows_B.size, rows_B.size))
        for br, W in zip(prob.a_blocks, Ws):
            if not br.rows.size:
                continue
            WAW = W @ br.mats @ W
            k = br.rows.size
            contrib = br.mats.reshape(k, -1) @ WAW.reshape(k, -1).T
            idx = posB[br.rows]
            MB[np.ix_(idx, idx)] += contrib
        try:
            lin = _KKT(MB, Af[rows_B], Af[rows_F])
        except _Singular:
            message = "singular Newton system"
            break

        WCW = [W @ c @ W for W, c in zip(Ws, C)]
        u = prob.apply(np.zeros(nf), WCW)
        cWc = sum(np.vdot(c, w) for c, w in zip(C, WCW))
        rhs2 = np.concatenate([b + u, cf])
        y2, x2 = lin.solve(rhs2, rows_B, rows_F, m)
        g = b - u
        denom = g @ y2 - cf @ x2 + cWc + kappa / tau

        def direction(eta, sigma, corr_blocks, corr_tk):
            # scaled complementarity right-hand side
            Hs, RHR = [], []
            for R, lam, cb in zip(Rs, lams, corr_blocks):
                rc = -np.diag(lam ** 2) + sigma * mu * np.eye(lam.size)
                if cb is not None:
                    rc = rc - cb
                H = 2.0 * rc / (lam[:, None] + lam[None, :])
                Hs.append(H)
                RHR.append(R @ H @ R.T)
            WLW = [W @ d @ W for W, d in zip(Ws, Ld)]
            t1 = [a - eta * w for a, w in zip(RHR, WLW)]
            r1 = -eta * Lp - prob.apply(np.zeros(nf), t1)
            rhs1 = np.concatenate([r1, eta * Lf])
            y1, x1 = lin.solve(rhs1, rows_B, rows_F, m)
            tk_rhs = sigma * mu - tau * kappa - corr_tk
            num = (-eta * Lg - g @ y1 + cf @ x1
                   + sum(np.vdot(c, a) for c, a in zip(C, RHR))
                   - eta * sum(np.vdot(c, w) for c, w in zip(C, WLW))
                   + tk_rhs / tau)
            dtau = num / denom
            dy = y1 + dtau * y2
            dxf = x1 + dtau * x2
            AsDy = prob.adjoint_blocks(dy)
            dS = [-a + c * dtau + eta * d for a, c, d in zip(AsDy, C, Ld)]
            dX = [rhr - W @ ds @ W for rhr, W, ds in zip(RHR, Ws, dS)]
            dkappa = (tk_rhs - kappa * dtau) / tau
            return dxf, dy, dX, dS, dtau, dkappa

        def step_length(dX, dS, dtau, dkappa):
            a = math.inf
            for R, lam, dx, ds in zip(Rs, lams, dX, dS):
                Rinv = np.linalg.inv(R)
                dxt = Rinv @ dx @ Rinv.T
                dst = R.T @ ds @ R
                a = min(a, _max_step(lam, (dxt + dxt.T) / 2), _max_step(lam, (dst + dst.T) / 2))
            if dtau < 0:
                a = min(a, -tau / dtau)
            if dkappa < 0:
                a = min(a, -kappa / dkappa)
            return a

        # predictor
        aff = direction(1.0, 0.0, [None] * nb, 0.0)
        a_aff = min(1.0, step_length(aff[2], aff[3], aff[4], aff[5]))
        sigma = min(1.0, max(0.0, 1.0 - a_aff)) ** 3
        # Mehrotra second-order term in scaled space
        corr = []
        for R, dx, ds in zip(Rs, aff[2], aff[3]):
            Rinv = np.linalg.inv(R)
            dxt = Rinv @ dx @ Rinv.T
            dst = R.T @ ds @ R
            P = dxt @ dst
            corr.append((P + P.T) / 2)
        dxf, dy, dX, dS, dtau, dkappa = direction(1.0 - sigma, sigma, corr, aff[4] * aff[5])
        amax = step_length(dX, dS, dtau, dkappa)
        alpha = min(1.0, st.step * amax)

        newX = [x + alpha * d for x, d in zip(X, dX)]
        newS = [s + alpha * d for s, d in zip(S, dS)]
        newX = [(x + x.T) / 2 for x in newX]
        newS = [(s + s.T) / 2 for s in newS]
        # guard against roundoff pushing an iterate out of the cone
        ok = True
        for x, s in zip(newX, newS):
            try:
                np.linalg.cholesky(x)
                np.linalg.cholesky(s)
            except np.linalg.LinAlgError:
                ok = False
                break
        if not ok:
            alpha *= 0.5
            newX = [x + alpha * d for x, d in zip(X, dX)]
            newS = [s + alpha * d for s, d in zip(S, dS)]
            newX = [(x + x.T) / 2 for x in newX]
            newS = [(s + s.T) / 2 for s in newS]
        X, S = newX, newS
        xf = xf + alpha * dxf
        y = y + alpha * dy
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkappa
        it += 1
        if alpha < 1e-7:
            stall += 1
            if stall >= 3:
                message = "step length collapsed"
                break
        else:
            stall = 0
        if tau <= 0 or kappa <= 0:
            message = "homogenising variables left the cone"
            break

    # final classification
    Lp, Lf, Ld, Lg, cx, by, AsY = residuals()
    xs = sum(np.vdot(x, s) for x, s in zip(X, S))
    tau_c = max(tau, 1e-300)
    pres = np.linalg.norm(Lp) / tau_c / bnorm
    dres = math.sqrt(np.linalg.norm(Lf) ** 2 + sum(np.linalg.norm(d) ** 2 for d in Ld)) / tau_c / cnorm
    gap = xs / tau_c ** 2
    relgap = gap / max(1.0, abs(cx / tau_c), abs(by / tau_c))
    certificate = None
    if status is None:
        if tau > 0 and pres <= st.loose_tol and dres <= st.loose_tol and min(gap, relgap) <= st.loose_tol:
            status = Status.INACCURATE
            message = message or "loose convergence only"
        elif history and history[-1]["pinfres"] <= st.loose_tol:
            status = Status.INACCURATE
            message = message or "loose infeasibility certificate only"
        else:
            status = Status.FAILED
    if status == Status.PRIMAL_INFEASIBLE:
        certificate = y / by
    ratio = (tau - kappa) / (tau + kappa) if tau + kappa > 0 else 0.0
    return SdpSolution(
        status=status,
        feasibility_ratio=float(ratio),
        x_free=xf / tau_c,
        blocks=[x / tau_c for x in X],
        y=y / tau_c,
        dual_blocks=[s / tau_c for s in S],
        primal_residual=float(pres),
        dual_residual=float(dres),
        gap=float(gap),
        iterations=it,
        solve_time=time.perf_counter() - t0,
        tau=float(tau),
        kappa=float(kappa),
        certificate=certificate,
        history=history,
        message=message,
    )


def _lu(K):
    # exact zero pivots are detected by the callers; scipy's warning is noise
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        return sla.lu_factor(K, check_finite=False)


class _KKT:
    """Factorisation of [[M, A_B], [0, A_F], [A_B^T, A_F^T, 0]]-type saddle systems.

    Unknowns are (dy_B, dy_F, dx_f); rows touching no PSD block have a zero
    Schur block, so dy_B is eliminated through a Cholesky factor of M and the
    remaining (dx_f, dy_F) system is solved by LU.
    """

    def __init__(self, MB, AB, AF):
        self.nB, self.nF = MB.shape[0], AF.shape[0]
        self.nf = AB.shape[1]
        self.AB, self.AF = AB, AF
        self.MB = MB
        self.full = None
        try:
            diag = np.sqrt(np.maximum(np.diag(MB), 1e-300))
            self.d = diag
            Ms = MB / diag[:, None] / diag[None, :]
            self.cho = sla.cho_factor(Ms, lower=True, check_finite=False)
            # cho_factor does not flag near-singularity; probe the pivots
            piv = np.diag(self.cho[0])
            if piv.min() <= 1e-13 * piv.max():
                raise np.linalg.LinAlgError
            ABs = AB / diag[:, None]
            self.MinvAB = sla.cho_solve(self.cho, ABs, check_finite=False) / diag[:, None]
            G = AB.T @ self.MinvAB
            nred = self.nf + self.nF
            K = np.zeros((nred, nred))
            K[: self.nf, : self.nf] = -G
            K[: self.nf, self.nf:] = AF.T
            K[self.nf:, : self.nf] = AF
            self.red = _lu(K) if nred else None
            if nred and not np.all(np.isfinite(self.red[0])):
                raise np.linalg.LinAlgError
            if nred and np.min(np.abs(np.diag(self.red[0]))) <= 1e-14 * max(1.0, np.max(np.abs(np.diag(self.red[0])))):
                raise np.linalg.LinAlgError
        except (np.linalg.LinAlgError, ValueError):
            self._full(MB, AB, AF)

    def _full(self, MB, AB, AF):
        n = self.nB + self.nF + self.nf
        K = np.zeros((n, n))
        nB, nF = self.nB, self.nF
        K[:nB, :nB] = MB
        K[:nB, nB + nF:] = AB
        K[nB:nB + nF, nB + nF:] = AF
        K[nB + nF:, :nB] = AB.T
        K[nB + nF:, nB:nB + nF] = AF.T
        # light regularisation keeps LU finite when the system is rank deficient
        scale = max(1.0, np.abs(K).max())
        K[np.diag_indices(n)] += 1e-14 * scale
        self.full = _lu(K)
        if not np.all(np.isfinite(self.full[0])):
            raise _Singular

    def solve(self, rhs, rows_B, rows_F, m, refine: int = 2):
        """rhs = [r (length m, original row order); r_x (length nf)].

        A few rounds of iterative refinement recover accuracy lost to the
        ill-conditioning of M near the end of the path.
        """
        dy, dx = self._solve(rhs, rows_B, rows_F, m)
        res = rhs - self._apply(dy, dx, rows_B, rows_F, m)
        rn = np.linalg.norm(res)
        for _ in range(refine):
            if not np.isfinite(rn) or rn == 0.0:
                break
            ey, ex = self._solve(res, rows_B, rows_F, m)
            ny, nx = dy + ey, dx + ex
            nres = rhs - self._apply(ny, nx, rows_B, rows_F, m)
            nn = np.linalg.norm(nres)
            if not nn < 0.5 * rn:
                break
            dy, dx, res, rn = ny, nx, nres, nn
        return dy, dx

    def _apply(self, dy, dx, rows_B, rows_F, m):
        out = np.zeros(m + self.nf)
        dyB, dyF = dy[rows_B], dy[rows_F]
        out[rows_B] = self.MB @ dyB + self.AB @ dx
        out[rows_F] = self.AF @ dx
        out[m:] = self.AB.T @ dyB + self.AF.T @ dyF
        return out

    def _solve(self, rhs, rows_B, rows_F, m):
        rB = rhs[:m][rows_B]
        rF = rhs[:m][rows_F]
        rx = rhs[m:]
        if self.full is not None:
            sol = sla.lu_solve(self.full, np.concatenate([rB, rF, rx]), check_finite=False)
            dyB, dyF, dx = sol[: self.nB], sol[self.nB: self.nB + self.nF], sol[self.nB + self.nF:]
        else:
            MinvrB = sla.cho_solve(self.cho, rB / self.d, check_finite=False) / self.d
            if self.red is not None:
                top = rx - self.AB.T @ MinvrB
                sol = sla.lu_solve(self.red, np.concatenate([top, rF]), check_finite=False)
                dx, dyF = sol[: self.nf], sol[self.nf:]
            else:
                dx, dyF = np.zeros(0), np.zeros(0)
            dyB = MinvrB - self.MinvAB @ dx
        dy = np.zeros(m)
        dy[rows_B] = dyB
        dy[rows_F] = dyF
        return dy, dx


@dataclass
class ResidualReport:
    equality_residual: float          # ||A x - b||_inf
    min_eigenvalues: list             # per primal block
    dual_min_eigenvalues: list        # per dual slack block
    duality_gap: float                # c.x - b.y
    complementarity: list             # <X_b, S_b> per block
    free_dual_residual: float         # ||A_f^T y - c_f||_inf


def check_solution(prob: SdpProblem, sol: SdpSolution) -> ResidualReport:
    """Recompute residuals of ``sol`` from the problem data alone."""
    Ax = prob.apply(sol.x_free, sol.blocks)
    eq = float(np.max(np.abs(Ax - prob.b))) if prob.m else 0.0
    mins = [float(np.linalg.eigvalsh((X + X.T) / 2)[0]) if X.size else 0.0 for X in sol.blocks]
    Z = [c - a for c, a in zip(prob.c_blocks, prob.adjoint_blocks(sol.y))]
    dmins = [float(np.linalg.eigvalsh((z + z.T) / 2)[0]) if z.size else 0.0 for z in Z]
    gap = prob.objective(sol.x_free, sol.blocks) - float(prob.b @ sol.y)
    comp = [float(np.vdot(X, z)) for X, z in zip(sol.blocks, Z)]
    fres = float(np.max(np.abs(prob.a_free.T @ sol.y - prob.c_free))) if prob.free_dim else 0.0
    return ResidualReport(eq, mins, dmins, float(gap), comp, fres)


def verify_infeasibility_ray(prob: SdpProblem, y: np.ndarray, tol: float = 1e-6) -> bool:
    """Farkas check: b.y > 0, A_f^T y = 0 and -A_b^*(y) PSD (within ``tol``)."""
    by = float(prob.b @ y)
    if by <= 0:
        return False
    yy = y / by
    if prob.free_dim and np.max(np.abs(prob.a_free.T @ yy)) > tol:
        return False
    for Z in prob.adjoint_blocks(yy):
        if Z.size:
            ev = np.linalg.eigvalsh(-(Z + Z.T) / 2)
            if ev[0] < -tol * max(1.0, np.abs(ev).max()):
                return False
    return True


__all__ = ["Status", "SdpProblem", "SdpSolution", "BlockRows", "Settings", "solve",
           "check_solution", "verify_infeasibility_ray", "ResidualReport"]
