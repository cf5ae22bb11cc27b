"""Dense primal-dual interior-point solver for block-diagonal SDPs.

Problem form (primal / dual)::

    minimize   <C, X>                 maximize   b^T y
    subject to <A_i, X> = b_i         subject to C - sum_i y_i A_i = Z
               X psd (per block),                Z psd (per block),
               x >= 0 (LP block)                 z >= 0 (LP block)

The LP block carries the nonnegative scalar slacks used for entrywise
inequalities.  Search directions are HKM with Mehrotra predictor-corrector
and the Schur complement is factored densely.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
ITERATION_LIMIT = "IterationLimit"
NUMERICAL_FAILURE = "NumericalFailure"


@dataclass(frozen=True)
class SdpProblem:
    """Immutable problem data.

    PSD constraint coefficients are stored as coordinate arrays
    ``(cid, blk, row, col, val)``; an off-diagonal entry means
    ``A[row, col] = A[col, row] = val``, so ``<A, X>`` picks up ``2 * val * X[row, col]``.
    LP coefficients are ``(cid, idx, val)``.
    """

    blocks: tuple
    lp_size: int
    C: tuple
    c_lp: np.ndarray
    b: np.ndarray
    psd_entries: tuple
    lp_entries: tuple

    @property
    def m(self) -> int:
        return len(self.b)

    @property
    def order(self) -> int:
        return sum(self.blocks) + self.lp_size


class SdpBuilder:
    """Incremental construction of an :class:`SdpProblem`."""

    def __init__(self):
        self.blocks: List[int] = []
        self.C: List[np.ndarray] = []
        self.lp_size = 0
        self.c_lp: List[float] = []
        self.rhs: List[np.ndarray] = []
        self._psd: List[tuple] = []
        self._lp: List[tuple] = []
        self.m = 0

    def add_block(self, n: int, C=None) -> int:
        self.blocks.append(n)
        self.C.append(np.zeros((n, n)) if C is None else np.array(C, dtype=float))
        return len(self.blocks) - 1

    def add_lp(self, count: int, c=None) -> int:
        start = self.lp_size
        self.lp_size += count
        self.c_lp.extend([0.0] * count if c is None else list(np.broadcast_to(c, count)))
        return start

    def add_constraints(self, rhs, psd=None, lp=None) -> np.ndarray:
        """Append a batch of constraints.

        ``psd`` is ``(local_cid, blk, row, col, val)`` and ``lp`` is
        ``(local_cid, idx, val)``; local ids index into ``rhs``.
        """
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        base = self.m
        if psd is not None:
            cid, blk, row, col, val = (np.atleast_1d(np.asarray(a)) for a in psd)
            cid = cid.astype(np.int64) + base
            self._psd.append((cid, np.broadcast_to(blk, cid.shape).astype(np.int64),
                              row.astype(np.int64), col.astype(np.int64),
                              np.broadcast_to(val, cid.shape).astype(float)))
        if lp is not None:
            cid, idx, val = (np.atleast_1d(np.asarray(a)) for a in lp)
            cid = cid.astype(np.int64) + base
            self._lp.append((cid, idx.astype(np.int64), np.broadcast_to(val, cid.shape).astype(float)))
        self.rhs.append(rhs)
        self.m += len(rhs)
        return np.arange(base, self.m)

    def add_constraint(self, rhs: float, psd=(), lp=()) -> int:
        """Single constraint from lists ``[(blk, row, col, val)]`` and ``[(idx, val)]``."""
        psd = list(psd)
        lp = list(lp)
        p = None
        if psd:
            blk, row, col, val = zip(*psd)
            p = (np.zeros(len(psd), dtype=np.int64), blk, row, col, val)
        q = None
        if lp:
            idx, val = zip(*lp)
            q = (np.zeros(len(lp), dtype=np.int64), idx, val)
        return int(self.add_constraints([rhs], p, q)[0])

    def build(self) -> SdpProblem:
        def cat(parts, k, dtype):
            return np.concatenate([p[k] for p in parts]).astype(dtype) if parts else np.zeros(0, dtype)

        cid, blk, row, col = (cat(self._psd, k, np.int64) for k in range(4))
        val = cat(self._psd, 4, float)
        lo, hi = np.minimum(row, col), np.maximum(row, col)
        for k, n in enumerate(self.blocks):
            sel = blk == k
            if np.any(hi[sel] >= n):
                raise ValueError(f"entry outside block {k} of order {n}")
        Cs = []
        for M in self.C:
            if not np.allclose(M, M.T):
                raise ValueError("objective blocks must be symmetric")
            Cs.append((M + M.T) / 2)
        return SdpProblem(
            blocks=tuple(self.blocks),
            lp_size=self.lp_size,
            C=tuple(Cs),
            c_lp=np.array(self.c_lp, dtype=float),
            b=np.concatenate(self.rhs) if self.rhs else np.zeros(0),
            psd_entries=(cid, blk, lo, hi, val),
            lp_entries=(cat(self._lp, 0, np.int64), cat(self._lp, 1, np.int64), cat(self._lp, 2, float)),
        )


@dataclass
class SolverOptions:
    gap_tol: float = 1e-8
    feas_tol: float = 1e-7
    stall_iters: int = 10
    max_iter: int = 200
    step: float = 0.98
    dual_bound: float = 1e10
    presolve: bool = True
    verbose: bool = False


@dataclass
class SdpSolution:
    X: list
    x_lp: np.ndarray
    y: np.ndarray
    Z: list
    z_lp: np.ndarray
    primal_obj: float
    dual_obj: float
    gap: float
    status: str
    iterations: int
    pinf: float
    dinf: float
    dropped: tuple = ()
    history: list = field(default_factory=list)
    wall_ms: float = 0.0


# ---------------------------------------------------------------- operator helpers

class _Ops:
    """Precomputed index structure for A(X), A^T y and the Schur complement."""

    def __init__(self, p: SdpProblem, keep: Optional[np.ndarray] = None):
        cid, blk, row, col, val = p.psd_entries
        lcid, lidx, lval = p.lp_entries
        m = p.m
        if keep is not None:
            remap = -np.ones(m, dtype=np.int64)
            remap[keep] = np.arange(len(keep))
            sel = remap[cid] >= 0
            cid, blk, row, col, val = remap[cid[sel]], blk[sel], row[sel], col[sel], val[sel]
            sel = remap[lcid] >= 0
            lcid, lidx, lval = remap[lcid[sel]], lidx[sel], lval[sel]
            m = len(keep)
        self.m = m
        self.blocks = p.blocks
        self.full = []
        for k in range(len(p.blocks)):
            s = blk == k
            c, r, q, v = cid[s], row[s], col[s], val[s]
            off = r != q
            c2 = np.concatenate([c, c[off]])
            r2 = np.concatenate([r, q[off]])
            q2 = np.concatenate([q, r[off]])
            v2 = np.concatenate([v, v[off]])
            order = np.argsort(c2, kind="stable")
            c2, r2, q2, v2 = c2[order], r2[order], q2[order], v2[order]
            ids = np.unique(c2)
            starts = np.searchsorted(c2, ids, side="left")
            ends = np.searchsorted(c2, ids, side="right")
            self.full.append((c2, r2, q2, v2, ids, starts, ends))
        self.lp_size = p.lp_size
        self.A_lp = sp.csr_matrix((lval, (lcid, lidx)), shape=(m, p.lp_size))

    def apply(self, X, x_lp):
        out = np.zeros(self.m)
        for k, (c, r, q, v, *_rest) in enumerate(self.full):
            if len(c):
                out += np.bincount(c, v * X[k][r, q], minlength=self.m)
        if self.lp_size:
            out += self.A_lp @ x_lp
        return out

    def adjoint(self, y):
        mats = []
        for k, (c, r, q, v, *_rest) in enumerate(self.full):
            n = self.blocks[k]
            mats.append(sp.coo_matrix((v * y[c], (r, q)), shape=(n, n)).toarray())
        lp = self.A_lp.T @ y if self.lp_size else np.zeros(0)
        return mats, lp

    def schur(self, X, W, x_lp, z_lp):
        """M_ij = tr(A_i X A_j W) + sum_k A_lp[i,k] A_lp[j,k] x_k / z_k."""
        M = np.zeros((self.m, self.m))
        for k, (c, r, q, v, ids, starts, ends) in enumerate(self.full):
            if not len(c):
                continue
            Xk, Wk = X[k], W[k]
            for i, s, e in zip(ids, starts, ends):
                P, Q, a = r[s:e], q[s:e], v[s:e]
                H = Wk[:, P] @ (a[:, None] * Xk[Q, :])
                M[i] += np.bincount(c, v * H[q, r], minlength=self.m)
        if self.lp_size:
            D = self.A_lp.multiply((x_lp / z_lp)[None, :])
            M += (D @ self.A_lp.T).toarray()
        return (M + M.T) / 2


def _maxabs(arrays) -> float:
    return max((float(np.max(np.abs(a))) for a in arrays if np.size(a)), default=0.0)


def _inner(A, B) -> float:
    return float(sum(np.vdot(a, b) for a, b in zip(A, B)))


def _max_step(X: np.ndarray, dX: np.ndarray) -> float:
    """Largest alpha with X + alpha dX psd (X positive definite)."""
    if X.shape[0] == 0:
        return np.inf
    L = np.linalg.cholesky(X)
    T = sla.solve_triangular(L, dX, lower=True)
    T = sla.solve_triangular(L, T.T, lower=True)
    lo = np.linalg.eigvalsh((T + T.T) / 2)[0]
    return np.inf if lo >= 0 else -1.0 / lo


def _max_step_lp(x, dx) -> float:
    neg = dx < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-x[neg] / dx[neg]))


def _presolve(p: SdpProblem, tol: float = 1e-10):
    """Indices of a linearly independent subset of constraint rows.

    Returns ``(keep, dropped, consistent)``.
    """
    m = p.m
    if m == 0:
        return np.arange(0), (), True
    cid, blk, row, col, val = p.psd_entries
    offsets = np.cumsum([0] + [n * n for n in p.blocks])
    scale = np.where(row == col, 1.0, np.sqrt(2.0))
    cols = offsets[blk] + row * np.array(p.blocks + (1,))[blk] + col if len(blk) else np.zeros(0, np.int64)
    lcid, lidx, lval = p.lp_entries
    total = offsets[-1] + p.lp_size
    S = sp.csr_matrix(
        (np.concatenate([val * scale, lval]), (np.concatenate([cid, lcid]), np.concatenate([cols, offsets[-1] + lidx]))),
        shape=(m, total),
    )
    G = (S @ S.T).toarray()
    d = np.diag(G)
    zero = np.nonzero(d <= 1e-300)[0]
    consistent = bool(np.all(np.abs(p.b[zero]) < 1e-12))
    nz = np.nonzero(d > 1e-300)[0]
    if len(nz) == 0:
        return nz, tuple(zero.tolist()), consistent
    scale = np.sqrt(d[nz])
    Gn = G[np.ix_(nz, nz)] / scale[:, None] / scale[None, :]
    _, piv, rank, _ = sla.lapack.dpstrf(Gn, lower=1, tol=tol)
    piv = piv[: len(nz)] - 1
    keep = np.sort(nz[piv[:rank]])
    dep = np.sort(nz[piv[rank:]])
    if len(dep):
        coef, *_ = np.linalg.lstsq(S[keep].T.toarray(), S[dep].T.toarray(), rcond=None)
        consistent = consistent and bool(np.allclose(coef.T @ p.b[keep], p.b[dep], atol=1e-9))
    return keep, tuple(sorted(zero.tolist() + dep.tolist())), consistent


# ---------------------------------------------------------------- main loop

_AUDIT_HOOKS: list = []


class audit:
    """Context manager that certifies every Optimal solve made inside it.

    ``reports`` collects one :class:`CertReport` per Optimal solution;
    ``failures`` keeps the ones that did not pass.
    """

    def __init__(self, **certify_kw):
        self.kw = certify_kw
        self.reports = []
        self.failures = []
        self.solves = 0

    def _hook(self, p, sol):
        self.solves += 1
        if sol.status == OPTIMAL:
            rep = certify(sol, p, **self.kw)
            self.reports.append(rep)
            if not rep.passed:
                self.failures.append(rep)

    def __enter__(self):
        _AUDIT_HOOKS.append(self._hook)
        return self

    def __exit__(self, *exc):
        _AUDIT_HOOKS.remove(self._hook)
        return False


def solve(p: SdpProblem, opts: Optional[SolverOptions] = None) -> SdpSolution:
    """Primal-dual path following (HKM direction, Mehrotra predictor-corrector)."""
    opts = opts or SolverOptions()
    t0 = time.perf_counter()
    keep, dropped = None, ()
    if opts.presolve and p.m:
        keep, dropped, consistent = _presolve(p)
        if not consistent:
            return _empty_solution(p, INFEASIBLE, dropped, t0)
        if not dropped:
            keep = None
    ops = _Ops(p, keep)
    b = p.b if keep is None else p.b[keep]
    m = ops.m
    nb = len(p.blocks)
    N = sum(p.blocks) + p.lp_size

    # X0 = tau I with tau = 1 + |b|_inf, Z0 scaled to the data
    tau = 1.0 + (np.max(np.abs(b)) if m else 0.0)
    normC = max([np.max(np.abs(C)) if C.size else 0.0 for C in p.C] + [np.max(np.abs(p.c_lp)) if p.lp_size else 0.0])
    normA = max(np.max(np.abs(p.psd_entries[4])) if len(p.psd_entries[4]) else 0.0,
                np.max(np.abs(p.lp_entries[2])) if len(p.lp_entries[2]) else 0.0)
    zeta = 1.0 + max(normC, normA * np.sqrt(max(p.blocks + (1,))))
    X = [tau * np.eye(n) for n in p.blocks]
    Z = [zeta * np.eye(n) for n in p.blocks]
    x = tau * np.ones(p.lp_size)
    z = zeta * np.ones(p.lp_size)
    y = np.zeros(m)
    # infinity-norm scaling, matching certify()
    normb = 1.0 + (float(np.max(np.abs(b))) if m else 0.0)
    normCf = 1.0 + normC
    history = []
    status = ITERATION_LIMIT
    best = None
    since_best = 0
    it = 0
    pobj = dobj = 0.0
    pinf = dinf = np.inf

    for it in range(opts.max_iter + 1):
        AX = ops.apply(X, x)
        Rp = b - AX
        AtY, aty_lp = ops.adjoint(y)
        Rd = [p.C[k] - AtY[k] - Z[k] for k in range(nb)]
        rd = p.c_lp - aty_lp - z
        pobj = _inner(p.C, X) + float(p.c_lp @ x)
        dobj = float(b @ y)
        pinf = _maxabs([Rp]) / normb
        dinf = _maxabs(Rd + [rd]) / normCf
        mu = (_inner(X, Z) + float(x @ z)) / N
        history.append((pobj, dobj, pinf, dinf, mu))
        gap = abs(pobj - dobj)
        if opts.verbose:
            print(f"{it:3d} p={pobj:+.10e} d={dobj:+.10e} pinf={pinf:.1e} dinf={dinf:.1e} mu={mu:.1e}")
        merit = max(gap / (opts.gap_tol * (1 + abs(pobj))), pinf / opts.feas_tol, dinf / opts.feas_tol)
        if merit <= 1.0:
            status = OPTIMAL
            break
        # progress measure: complementarity rather than |pobj - dobj|, which
        # may grow transiently while an infeasible iterate becomes feasible
        progress = max(mu * N / (opts.gap_tol * (1 + abs(pobj))), pinf / opts.feas_tol, dinf / opts.feas_tol)
        if best is None or progress < best[0]:
            best = (progress, [Xk.copy() for Xk in X], x.copy(), y.copy(), [Zk.copy() for Zk in Z], z.copy(), it)
            since_best = 0
        else:
            since_best += 1
            if since_best >= opts.stall_iters:
                status = NUMERICAL_FAILURE
                break
        if abs(dobj) > opts.dual_bound or (m and np.max(np.abs(y)) > opts.dual_bound) or abs(pobj) > opts.dual_bound:
            status = INFEASIBLE
            break
        if it == opts.max_iter:
            break
        try:
            W = [sla.cho_solve(sla.cho_factor(Zk, lower=True), np.eye(len(Zk))) for Zk in Z]
            W = [(Wk + Wk.T) / 2 for Wk in W]
            M = ops.schur(X, W, x, z)
            chol = _factor(M)
        except (np.linalg.LinAlgError, sla.LinAlgError):
            status = NUMERICAL_FAILURE
            break

        def direction(sigma, D, d):
            R = []
            for k in range(nb):
                n = p.blocks[k]
                T = (sigma * mu * np.eye(n) - D[k]) @ W[k] - X[k] - X[k] @ Rd[k] @ W[k]
                R.append(T)
            r_lp = (sigma * mu - d) / z - x - x * rd / z if p.lp_size else np.zeros(0)
            rhs = Rp - ops.apply([(T + T.T) / 2 for T in R], r_lp)
            if m:
                dy = sla.cho_solve(chol, rhs)
                dy += sla.cho_solve(chol, rhs - M @ dy)
            else:
                dy = np.zeros(0)
            AtDy, atdy_lp = ops.adjoint(dy)
            dZ = [Rd[k] - AtDy[k] for k in range(nb)]
            dX = []
            for k in range(nb):
                T = R[k] + X[k] @ AtDy[k] @ W[k]
                dX.append((T + T.T) / 2)
            dz = rd - atdy_lp
            dx = r_lp + x * atdy_lp / z if p.lp_size else np.zeros(0)
            return dX, dx, dy, dZ, dz

        def steps(dX, dx, dZ, dz):
            ap = min([_max_step(X[k], dX[k]) for k in range(nb)] + [_max_step_lp(x, dx)])
            ad = min([_max_step(Z[k], dZ[k]) for k in range(nb)] + [_max_step_lp(z, dz)])
            return min(1.0, opts.step * ap), min(1.0, opts.step * ad)

        try:
            zeroD = [np.zeros((n, n)) for n in p.blocks]
            dX, dx, dy, dZ, dz = direction(0.0, zeroD, np.zeros(p.lp_size))
            ap, ad = steps(dX, dx, dZ, dz)
            mu_aff = (_inner([X[k] + ap * dX[k] for k in range(nb)], [Z[k] + ad * dZ[k] for k in range(nb)])
                      + float((x + ap * dx) @ (z + ad * dz))) / N
            sigma = min(1.0, max(0.0, mu_aff / mu) ** 3) if mu > 0 else 0.0
            D = [dX[k] @ dZ[k] for k in range(nb)]
            dX, dx, dy, dZ, dz = direction(sigma, D, dx * dz)
            ap, ad = steps(dX, dx, dZ, dz)
        except (np.linalg.LinAlgError, sla.LinAlgError):
            status = NUMERICAL_FAILURE
            break
        X = [X[k] + ap * dX[k] for k in range(nb)]
        Z = [Z[k] + ad * dZ[k] for k in range(nb)]
        x = x + ap * dx
        z = z + ad * dz
        y = y + ad * dy

    if status != OPTIMAL and best is not None:
        # report the best iterate seen rather than the last one
        _, X, x, y, Z, z, _it = best
        pobj = _inner(p.C, X) + float(p.c_lp @ x)
        dobj = float(b @ y)
        pinf = _maxabs([b - ops.apply(X, x)]) / normb
        AtY, aty_lp = ops.adjoint(y)
        dinf = _maxabs([p.C[k] - AtY[k] - Z[k] for k in range(nb)] + [p.c_lp - aty_lp - z]) / normCf
    if keep is not None:
        y_full = np.zeros(p.m)
        y_full[keep] = y
        y = y_full
    sol = SdpSolution(
        X=X, x_lp=x, y=y, Z=Z, z_lp=z, primal_obj=pobj, dual_obj=dobj, gap=abs(pobj - dobj),
        status=status, iterations=it, pinf=pinf, dinf=dinf, dropped=tuple(dropped), history=history,
        wall_ms=(time.perf_counter() - t0) * 1e3,
    )
    for hook in list(_AUDIT_HOOKS):
        hook(p, sol)
    return sol


def _factor(M: np.ndarray):
    if M.shape[0] == 0:
        return None
    reg = 0.0
    scale = max(1.0, float(np.max(np.abs(np.diag(M)))))
    for _ in range(6):
        try:
            return sla.cho_factor(M + reg * np.eye(len(M)), lower=True)
        except (np.linalg.LinAlgError, sla.LinAlgError):
            reg = scale * (1e-14 if reg == 0 else reg * 100 / scale)
    raise np.linalg.LinAlgError("Schur complement is not positive definite")


def _empty_solution(p, status, dropped, t0):
    return SdpSolution(
        X=[np.zeros((n, n)) for n in p.blocks], x_lp=np.zeros(p.lp_size), y=np.zeros(p.m),
        Z=[np.zeros((n, n)) for n in p.blocks], z_lp=np.zeros(p.lp_size), primal_obj=np.nan,
        dual_obj=np.nan, gap=np.nan, status=status, iterations=0, pinf=np.nan, dinf=np.nan,
        dropped=tuple(dropped), wall_ms=(time.perf_counter() - t0) * 1e3,
    )


# ---------------------------------------------------------------- certification

@dataclass
class CertReport:
    min_eig_X: float
    min_eig_S: float
    primal_residual: float
    gap: float
    primal_obj: float
    dual_obj: float
    checks: dict

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def certify(sol: SdpSolution, p: SdpProblem, psd_tol: float = 1e-8, residual_tol: float = 1e-7,
            gap_tol: float = 1e-8) -> CertReport:
    """Recheck a solution from the raw problem data only.

    The dual slack is recomputed as ``S = C - sum y_i A_i`` rather than
    taken from the solver, and the objectives are recomputed from X and y.
    """
    cid, blk, row, col, val = p.psd_entries
    lcid, lidx, lval = p.lp_entries
    y = np.asarray(sol.y, dtype=float)
    eig_X = [np.linalg.eigvalsh((Xk + Xk.T) / 2)[0] for Xk in sol.X if len(Xk)]
    min_X = min(eig_X + ([float(np.min(sol.x_lp))] if p.lp_size else []), default=0.0)

    AX = np.zeros(p.m)
    S = [np.array(C, dtype=float) for C in p.C]
    for e in range(len(cid)):
        k, r, c, v = blk[e], row[e], col[e], val[e]
        Xk = sol.X[k]
        AX[cid[e]] += v * Xk[r, c] * (1 if r == c else 2)
        S[k][r, c] -= y[cid[e]] * v
        if r != c:
            S[k][c, r] -= y[cid[e]] * v
    s_lp = np.array(p.c_lp, dtype=float)
    for e in range(len(lcid)):
        AX[lcid[e]] += lval[e] * sol.x_lp[lidx[e]]
        s_lp[lidx[e]] -= y[lcid[e]] * lval[e]
    eig_S = [np.linalg.eigvalsh(Sk)[0] for Sk in S if len(Sk)]
    min_S = min(eig_S + ([float(np.min(s_lp))] if p.lp_size else []), default=0.0)
    scale = 1.0 + (float(np.max(np.abs(p.b))) if p.m else 0.0)
    resid = float(np.max(np.abs(AX - p.b))) / scale if p.m else 0.0
    pobj = sum(float(np.vdot(C, Xk)) for C, Xk in zip(p.C, sol.X)) + float(p.c_lp @ sol.x_lp)
    dobj = float(p.b @ y)
    gap = abs(pobj - dobj)
    checks = {
        "status": sol.status == OPTIMAL,
        "X_psd": min_X >= -psd_tol,
        "S_psd": min_S >= -psd_tol,
        "residual": resid <= residual_tol,
        "gap": gap <= gap_tol * (1 + abs(pobj)),
    }
    return CertReport(min_X, min_S, resid, gap, pobj, dobj, checks)


# ---------------------------------------------------------------- SDPA export

def write_sdpa(p: SdpProblem, path) -> None:
    """Sparse SDPA dump for cross-checking with external solvers.

    SDPA's dual form ``max <F0, Y> s.t. <F_i, Y> = c_i`` is matched with
    ``F0 = -C``, ``F_i = A_i``, ``c = b``; its optimum is minus ours.  The LP
    block is written as a diagonal block with negative size.
    """
    fmt = "%.17g"
    nblocks = len(p.blocks) + (1 if p.lp_size else 0)
    sizes = list(p.blocks) + ([-p.lp_size] if p.lp_size else [])
    lines = [str(p.m), str(nblocks), " ".join(str(s) for s in sizes), " ".join(fmt % v for v in p.b)]
    for k, C in enumerate(p.C):
        r, c = np.nonzero(np.triu(C))
        for i, j in zip(r, c):
            lines.append(f"0 {k + 1} {i + 1} {j + 1} " + fmt % (-C[i, j]))
    lpk = len(p.blocks) + 1
    for i in np.nonzero(p.c_lp)[0]:
        lines.append(f"0 {lpk} {i + 1} {i + 1} " + fmt % (-p.c_lp[i]))
    cid, blk, row, col, val = p.psd_entries
    for e in np.lexsort((col, row, blk, cid)):
        lines.append(f"{cid[e] + 1} {blk[e] + 1} {row[e] + 1} {col[e] + 1} " + fmt % val[e])
    lcid, lidx, lval = p.lp_entries
    for e in np.lexsort((lidx, lcid)):
        lines.append(f"{lcid[e] + 1} {lpk} {lidx[e] + 1} {lidx[e] + 1} " + fmt % lval[e])
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
