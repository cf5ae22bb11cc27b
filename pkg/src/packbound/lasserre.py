"""Discrete Lasserre hierarchy on finite graphs.

Sets of vertices are sorted tuples.  A family I_t lists every independent
set of size <= t (empty set first) in (size, lex) order.  The operator
A_t sends a kernel on I_t x I_t to a function on I_2t by summing over
ordered pairs with a given union; its adjoint builds the moment matrix
``M(J, J') = lam(J | J')``.

All moment programs are posed for the solver as

    primal:  min K(0,0)  s.t.  A_t K(S) + w_S = -[|S| = 1],  S != 0,  K psd, w >= 0
    dual:    max sum_{|S|=1} lam_S  s.t.  A_t* lam psd (lam_0 = 1), lam >= 0,

so one solve yields both the moment vector (as the dual multipliers) and
an optimal kernel.  Without positivity the slacks w are dropped.
"""

from __future__ import annotations

import itertools
import threading
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import sdp
from .config import BOUND_TOL, DEFAULT_CAPS, PSD_TOL, Caps
from .errors import InvalidLattice, SizeCapExceeded, SolverFailure
from .geometry import PointConfiguration, conflict_graph
from .graphs import Graph


@dataclass(frozen=True)
class IndependentSetFamily:
    base: Graph
    t: int
    sets: tuple
    index: dict = field(compare=False, repr=False)

    def __len__(self):
        return len(self.sets)

    def count_upto(self, k: int) -> int:
        """|I_k| for k <= t."""
        return sum(1 for s in self.sets if len(s) <= k)


@dataclass
class MomentVector:
    family: IndependentSetFamily
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if len(self.values) != len(self.family):
            raise ValueError("one value per set of the family is required")
        if abs(self.values[0] - 1.0) > 1e-9:
            raise ValueError("moment at the empty set must be 1")

    def __getitem__(self, s):
        return self.values[self.family.index[tuple(sorted(s))]]


def enumerate_independent_sets(g: Graph, t: int, caps: Caps = DEFAULT_CAPS) -> IndependentSetFamily:
    if t < 0:
        raise ValueError("level must be nonnegative")
    out = [()]

    def rec(chosen: tuple, allowed: int):
        if len(chosen) == t:
            return
        while allowed:
            v = (allowed & -allowed).bit_length() - 1
            allowed &= allowed - 1
            s = chosen + (v,)
            out.append(s)
            if len(out) > caps.independent_sets:
                raise SizeCapExceeded("independent sets", len(out), caps.independent_sets)
            rec(s, allowed & ~g.adj[v])

    rec((), (1 << g.n) - 1)
    out.sort(key=lambda s: (len(s), s))
    return IndependentSetFamily(g, t, tuple(out), {s: i for i, s in enumerate(out)})


def _pairs(ft: IndependentSetFamily, f2t: IndependentSetFamily, ordered: bool = True):
    """Index arrays (i, j, s) over pairs of ``ft`` whose union lies in ``f2t``."""
    cache_key = (id(ft), id(f2t), ordered)
    hit = _PAIR_CACHE.get(cache_key)
    if hit is not None and hit[0] is ft and hit[1] is f2t:
        return hit[2]
    I, J, S = [], [], []
    sets = ft.sets
    for i, a in enumerate(sets):
        for j in range(0 if ordered else i, len(sets)):
            u = tuple(sorted(set(a).union(sets[j])))
            k = f2t.index.get(u)
            if k is not None:
                I.append(i)
                J.append(j)
                S.append(k)
    res = (np.array(I, dtype=np.int64), np.array(J, dtype=np.int64), np.array(S, dtype=np.int64))
    if len(_PAIR_CACHE) > 64:
        _PAIR_CACHE.clear()
    _PAIR_CACHE[cache_key] = (ft, f2t, res)
    return res


_PAIR_CACHE: dict = {}


def at_operator(ft: IndependentSetFamily, f2t: IndependentSetFamily, K) -> np.ndarray:
    """A_t K(S) = sum of K(J, J') over ordered pairs with J | J' = S."""
    K = np.asarray(K, dtype=float)
    if K.shape != (len(ft), len(ft)):
        raise ValueError("kernel must be indexed by the level-t family")
    I, J, S = _pairs(ft, f2t)
    return np.bincount(S, weights=K[I, J], minlength=len(f2t))


def at_adjoint_matrix(mv: MomentVector, t: int, ft: Optional[IndependentSetFamily] = None) -> np.ndarray:
    """Moment matrix on I_t: entry (J, J') = mv[J | J'], zero when the union is dependent."""
    if ft is None:
        ft = enumerate_independent_sets(mv.family.base, t)
    I, J, S = _pairs(ft, mv.family)
    M = np.zeros((len(ft), len(ft)))
    M[I, J] = mv.values[S]
    return M


# ---------------------------------------------------------------- moment SDPs

@dataclass
class LasResult:
    t: int
    positive: bool
    value: float            # sum of singleton moments of the verified moment vector
    dual_value: float       # K(0,0) of the verified kernel
    gap: float
    status: str
    moments: Optional[MomentVector]
    kernel: Optional[np.ndarray]
    lam_violation: float
    kernel_violation: float
    certified: bool
    family_sizes: list
    wall_ms: float


def _check_level(g: Graph, t: int, caps: Caps):
    if t < 1:
        raise ValueError("level must be at least 1")
    if t > caps.lasserre_level:
        raise SizeCapExceeded("lasserre level", t, caps.lasserre_level)


def _families(g: Graph, t: int, caps: Caps):
    _check_level(g, t, caps)
    f2t = enumerate_independent_sets(g, 2 * t, caps)
    if len(f2t) > caps.lasserre_moments:
        raise SizeCapExceeded("lasserre moments |I_2t|", len(f2t), caps.lasserre_moments)
    ft = enumerate_independent_sets(g, t, caps)
    return ft, f2t


def build_moment_program(ft, f2t, positive: bool = True) -> sdp.SdpProblem:
    N = len(ft)
    B = sdp.SdpBuilder()
    C = np.zeros((N, N))
    C[0, 0] = 1.0
    B.add_block(N, C)
    I, J, S = _pairs(ft, f2t, ordered=False)
    keep = S > 0
    rhs = np.array([1.0 if len(s) == 1 else 0.0 for s in f2t.sets[1:]])
    m = len(rhs)
    lp = None
    if positive and m:
        s0 = B.add_lp(m)
        lp = (np.arange(m), s0 + np.arange(m), -1.0)
    B.add_constraints(rhs, (S[keep] - 1, 0, I[keep], J[keep], -1.0), lp)
    return B.build()


def kernel_violation(ft, f2t, K, positive: bool = True) -> float:
    """Worst violation of A_t K(S) <= -[|S|=1] (equality without positivity) and K psd."""
    K = np.asarray(K, dtype=float)
    rhs = -np.array([1.0 if len(s) == 1 else 0.0 for s in f2t.sets])
    a = at_operator(ft, f2t, K)[1:] - rhs[1:]
    worst = float(np.max(a)) if positive else float(np.max(np.abs(a)))
    worst = max(worst if len(a) else 0.0, -float(np.linalg.eigvalsh((K + K.T) / 2)[0]))
    return max(worst, 0.0)


def moment_violation(ft, mv: MomentVector, positive: bool = True) -> float:
    M = at_adjoint_matrix(mv, ft.t, ft)
    worst = -float(np.linalg.eigvalsh(M)[0])
    if positive:
        worst = max(worst, -float(mv.values.min()))
    return max(worst, 0.0)


class _Cache:
    def __init__(self):
        self._data = {}
        self._lock = threading.Lock()

    def get(self, key):
        with self._lock:
            return self._data.get(key)

    def put(self, key, value):
        with self._lock:
            if len(self._data) > 4096:
                self._data.clear()
            self._data[key] = value

    def clear(self):
        with self._lock:
            self._data.clear()


CACHE = _CACHE = _Cache()


def las_result(g: Graph, t: int, positive: bool = True, caps: Caps = DEFAULT_CAPS,
               opts: Optional[sdp.SolverOptions] = None, tol: float = 1e-7) -> LasResult:
    """Solve the level-t program and verify both sides independently.

    The moment vector is rebuilt from the multipliers and checked through
    :func:`at_adjoint_matrix`; the kernel is checked through :func:`at_operator`.
    """
    t0 = time.perf_counter()
    ft, f2t = _families(g, t, caps)
    key = (g.key(), g.n, t, positive)
    hit = _CACHE.get(key)
    if hit is not None:
        return hit
    sizes = [f2t.count_upto(k) for k in range(2 * t + 1)]
    if g.n == 0:
        res = LasResult(t, positive, 0.0, 0.0, 0.0, sdp.OPTIMAL, MomentVector(f2t, [1.0]),
                        np.zeros((1, 1)), 0.0, 0.0, True, sizes, 0.0)
        _CACHE.put(key, res)
        return res
    p = build_moment_program(ft, f2t, positive)
    sol = sdp.solve(p, opts)
    if sol.status != sdp.OPTIMAL:
        raise SolverFailure(sol.status, f"lasserre t={t}")
    lam = MomentVector(f2t, np.concatenate([[1.0], sol.y]))
    K = sol.X[0]
    lv = moment_violation(ft, lam, positive)
    kv = kernel_violation(ft, f2t, K, positive)
    value = float(sum(lam.values[i] for i, s in enumerate(f2t.sets) if len(s) == 1))
    dual_value = float(K[0, 0])
    res = LasResult(t, positive, value, dual_value, abs(dual_value - value), sol.status, lam, K,
                    lv, kv, lv <= tol and kv <= tol and sdp.certify(sol, p).passed, sizes,
                    (time.perf_counter() - t0) * 1e3)
    _CACHE.put(key, res)
    return res


def las_prime(g: Graph, t: int, caps: Caps = DEFAULT_CAPS, opts=None) -> float:
    return las_result(g, t, True, caps, opts).value


def las_plain(g: Graph, t: int, caps: Caps = DEFAULT_CAPS, opts=None) -> float:
    return las_result(g, t, False, caps, opts).value


def las_prime_dual(g: Graph, t: int, caps: Caps = DEFAULT_CAPS, opts=None) -> float:
    """inf K(0,0) over psd kernels on I_t with A_t K(S) <= -[|S| = 1]."""
    return las_result(g, t, True, caps, opts).dual_value


@dataclass
class SchurResult:
    value: float
    schur_min_eig: float
    matrix: np.ndarray
    status: str


def build_bordered_program(ft, f2t) -> sdp.SdpProblem:
    """Moment matrix as the primal variable.

    X is indexed by I_t with X(0,0) = 1 as the border; entries with equal
    union are tied together, entries with dependent union vanish, and each
    union's common value is a nonnegative slack.
    """
    N = len(ft)
    B = sdp.SdpBuilder()
    C = np.zeros((N, N))
    for j, s in enumerate(ft.sets):
        if len(s) == 1:
            C[0, j] = C[j, 0] = -0.5
    B.add_block(N, C)
    B.add_constraint(1.0, [(0, 0, 0, 1.0)])
    groups: dict = {}
    zero = []
    for i, a in enumerate(ft.sets):
        for j in range(i, N):
            u = tuple(sorted(set(a).union(ft.sets[j])))
            if u in f2t.index:
                groups.setdefault(u, []).append((i, j))
            else:
                zero.append((i, j))
    for i, j in zero:
        B.add_constraint(0.0, [(0, i, j, 1.0)])
    s0 = B.add_lp(len(groups) - 1)
    k = 0
    for u, pos in groups.items():
        if not u:
            continue
        (i0, j0) = pos[0]
        w0 = 1.0 if i0 == j0 else 0.5
        for i, j in pos[1:]:
            w = 1.0 if i == j else 0.5
            B.add_constraint(0.0, [(0, i, j, w), (0, i0, j0, -w0)])
        B.add_constraint(0.0, [(0, i0, j0, w0)], [(s0 + k, -1.0)])
        k += 1
    return B.build()


def las_prime_schur_result(g: Graph, t: int, caps: Caps = DEFAULT_CAPS, opts=None) -> SchurResult:
    """max mu(I_=1) with (A^{!=0})* mu - mu (x) mu psd, via the bordered matrix.

    The border row of X carries mu on I_t minus the empty set, so the Schur
    complement of X(0,0) = 1 is exactly the nonlinear constraint.
    """
    ft, f2t = _families(g, t, caps)
    if g.n == 0:
        return SchurResult(0.0, 0.0, np.ones((1, 1)), sdp.OPTIMAL)
    p = build_bordered_program(ft, f2t)
    sol = sdp.solve(p, opts)
    if sol.status != sdp.OPTIMAL:
        raise SolverFailure(sol.status, f"bordered lasserre t={t}")
    X = sol.X[0]
    v = X[1:, 0] / X[0, 0]
    S = X[1:, 1:] - np.outer(v, v) * X[0, 0]
    lo = float(np.linalg.eigvalsh(S)[0]) if S.size else 0.0
    return SchurResult(-sol.primal_obj, lo, X, sol.status)


def las_prime_schur(g: Graph, t: int, caps: Caps = DEFAULT_CAPS, opts=None) -> float:
    return las_prime_schur_result(g, t, caps, opts).value


def las_on_points(c: PointConfiguration, t: int, caps: Caps = DEFAULT_CAPS, opts=None) -> float:
    """las'_t of the conflict graph of ``c``."""
    return las_prime(conflict_graph(c), t, caps, opts)


def las_record(g: Graph, t: int, caps: Caps = DEFAULT_CAPS, opts=None) -> dict:
    rp = las_result(g, t, True, caps, opts)
    rq = las_result(g, t, False, caps, opts)
    status = rp.status if rp.certified and rq.certified else "Uncertified"
    return {"graph_hash": g.key(), "t": t, "las_prime": rp.value, "las_plain": rq.value,
            "dual_value": rp.dual_value, "family_sizes": rp.family_sizes, "status": status}


# ---------------------------------------------------------------- periodic packings

@dataclass(frozen=True)
class PeriodicPacking:
    """Union of ``translates + basis @ Z^d``; columns of ``basis`` span the lattice."""

    basis: np.ndarray
    translates: np.ndarray

    @classmethod
    def make(cls, basis, translates) -> "PeriodicPacking":
        B = np.atleast_2d(np.asarray(basis, dtype=float))
        T = np.asarray(translates, dtype=float).reshape(-1, B.shape[0])
        return cls(B, T)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def cell_volume(self) -> float:
        return abs(float(np.linalg.det(self.basis)))

    def validate(self, tol: float = 1e-9) -> None:
        d = self.dim
        if d not in (1, 2) or self.basis.shape != (d, d):
            raise InvalidLattice("only 1- and 2-dimensional lattices are supported")
        if self.cell_volume < 1e-12:
            raise InvalidLattice("lattice basis is singular")
        if len(self.translates) == 0:
            raise InvalidLattice("at least one translate is required")
        # shortest lattice vectors are bounded by the basis, so a small window suffices
        reach = int(np.ceil(2.0 / np.min(np.abs(np.linalg.svd(self.basis, compute_uv=False))))) + 1
        coeffs = np.array(list(itertools.product(range(-reach, reach + 1), repeat=d)), dtype=float)
        vecs = coeffs @ self.basis.T
        for a in range(len(self.translates)):
            for b in range(len(self.translates)):
                diff = self.translates[a] - self.translates[b] + vecs
                dist = np.linalg.norm(diff, axis=1)
                if a == b:
                    dist = dist[np.any(coeffs != 0, axis=1)]
                if len(dist) and dist.min() < 2.0 - tol:
                    raise InvalidLattice(f"points closer than 2 (distance {dist.min():.6g})")

    def points_in(self, lo, hi, shift) -> np.ndarray:
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        inv = np.linalg.inv(self.basis)
        corners = np.array(list(itertools.product(*zip(lo, hi))))
        out = []
        for tr in self.translates:
            c = (corners - tr - shift) @ inv.T
            ranges = [range(int(np.floor(c[:, k].min())) - 1, int(np.ceil(c[:, k].max())) + 2)
                      for k in range(self.dim)]
            k = np.array(list(itertools.product(*ranges)), dtype=float)
            pts = k @ self.basis.T + tr + shift
            ok = np.all((pts >= lo) & (pts < hi), axis=1)
            out.append(pts[ok])
        return np.concatenate(out) if out else np.zeros((0, self.dim))


@dataclass
class CorrelationRecord:
    center_density: float
    density_estimate: float
    bins: np.ndarray            # lower corners
    bin_width: float
    moments: MomentVector
    interior: list              # indices into I_t(bins) used for the psd check
    min_eig: float
    psd_ok: bool

    def record(self) -> dict:
        return {"center_density": self.center_density, "density_estimate": self.density_estimate,
                "bins": len(self.bins), "family_size": len(self.moments.family),
                "min_eig": self.min_eig, "psd_ok": self.psd_ok}


def periodic_correlation_restriction(packing: PeriodicPacking, t: int, window, samples: int = 64,
                                     bin_width: float = 1.0, psd_tol: float = 1e-6,
                                     caps: Caps = DEFAULT_CAPS) -> CorrelationRecord:
    """Windowed, binned correlation measure of a periodic packing.

    The window is cut into cubic bins of diameter < 2, so a bin holds at
    most one packing point.  Translating the packing by ``v`` over a grid
    of ``samples**d`` points of the fundamental cell, the measure of a set
    of bins is the fraction of shifts occupying all of them.  Bins whose
    points would always conflict form the edges of the bin graph.
    """
    packing.validate()
    d = packing.dim
    lo, hi = (np.asarray(w, dtype=float).reshape(d) for w in window)
    if np.any(hi <= lo):
        raise ValueError("window must have positive extent")
    if bin_width * np.sqrt(d) >= 2.0:
        raise ValueError("bins must have diameter below 2")
    counts = np.floor((hi - lo) / bin_width + 1e-9).astype(int)
    corners = np.array(list(itertools.product(*[range(c) for c in counts])), dtype=float) * bin_width + lo
    nb = len(corners)
    # bins conflict when even their farthest points are closer than 2
    span = np.abs(corners[:, None, :] - corners[None, :, :]) + bin_width
    far = np.sqrt((span ** 2).sum(-1))
    edges = [(i, j) for i in range(nb) for j in range(i + 1, nb) if far[i, j] < 2.0 - 1e-9]
    g = Graph(nb, edges)
    _check_level(g, t, caps)
    f2t = enumerate_independent_sets(g, 2 * t, caps)
    ft = enumerate_independent_sets(g, t, caps)

    grid = (np.arange(samples) + 0.5) / samples
    shifts = np.array(list(itertools.product(grid, repeat=d))) @ packing.basis.T
    occ = np.zeros((len(shifts), nb), dtype=bool)
    for k, v in enumerate(shifts):
        pts = packing.points_in(lo, lo + counts * bin_width, v)
        if len(pts):
            idx = np.floor((pts - lo) / bin_width + 1e-12).astype(int)
            idx = np.clip(idx, 0, counts - 1)
            flat = np.ravel_multi_index(idx.T, counts)
            occ[k, flat] = True
    vals = np.empty(len(f2t))
    for i, s in enumerate(f2t.sets):
        vals[i] = np.mean(np.all(occ[:, list(s)], axis=1)) if s else 1.0
    mv = MomentVector(f2t, vals)
    M = at_adjoint_matrix(mv, t, ft)

    margin = 4.0 * t
    inner_bin = np.all((corners >= lo + margin - 1e-12) & (corners + bin_width <= hi - margin + 1e-12), axis=1)
    interior = [i for i, s in enumerate(ft.sets) if all(inner_bin[b] for b in s)]
    sub = M[np.ix_(interior, interior)]
    min_eig = float(np.linalg.eigvalsh(sub)[0]) if len(interior) else 0.0
    inner_single = [f2t.index[(b,)] for b in range(nb) if inner_bin[b]]
    inner_vol = inner_bin.sum() * bin_width ** d
    est = float(vals[inner_single].sum() / inner_vol) if inner_vol else float("nan")
    return CorrelationRecord(len(packing.translates) / packing.cell_volume, est, corners, bin_width,
                             mv, interior, min_eig, min_eig >= -psd_tol)
