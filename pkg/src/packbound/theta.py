"""Lovász theta and its Schrijver / Szegedy variants as SDPs.

Graphs passed here carry constraints on their *edges*: for a point
configuration the relevant graph is the conflict graph, whose edges are
pairs closer than 2.  With that convention

    alpha(G) <= theta'(G) <= theta(G) <= theta+(G) <= chi(complement(G)).

Primal programs optimise over trace-one psd matrices M; dual programs
over psd kernels K with constant diagonal t - 1.
"""

from __future__ import annotations

import enum
import threading
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import sdp
from .config import BOUND_TOL, DEFAULT_CAPS, PSD_TOL, Caps
from .errors import InfeasibleInput, SizeCapExceeded, SolverFailure
from .geometry import PointConfiguration, conflict_graph
from .graphs import Graph


class ThetaVariant(enum.Enum):
    THETA_PLUS = "theta+"
    THETA = "theta"
    THETA_PRIME = "theta'"

    @classmethod
    def parse(cls, text) -> "ThetaVariant":
        if isinstance(text, cls):
            return text
        aliases = {"theta+": cls.THETA_PLUS, "theta_plus": cls.THETA_PLUS, "plus": cls.THETA_PLUS,
                   "theta": cls.THETA, "theta'": cls.THETA_PRIME, "theta_prime": cls.THETA_PRIME,
                   "prime": cls.THETA_PRIME}
        try:
            return aliases[str(text).lower()]
        except KeyError:
            raise ValueError(f"unknown theta variant {text!r}") from None


ALL_VARIANTS = (ThetaVariant.THETA_PRIME, ThetaVariant.THETA, ThetaVariant.THETA_PLUS)


@dataclass
class ThetaResult:
    variant: ThetaVariant
    n: int
    value: float
    dual_value: float
    gap: float
    status: str
    wall_ms: float
    matrix: Optional[np.ndarray] = None
    certified: bool = False
    rounds: int = 1

    def record(self) -> dict:
        return {"variant": self.variant.value, "n": self.n, "value": self.value,
                "dual_value": self.dual_value, "gap": self.gap, "status": self.status,
                "wall_ms": self.wall_ms}


def _check_caps(g: Graph, v: ThetaVariant, caps: Caps):
    cap = caps.theta_prime if v is ThetaVariant.THETA_PRIME else caps.theta
    if g.n > cap:
        raise SizeCapExceeded(f"{v.value}", g.n, cap)


def build_primal(g: Graph, v: ThetaVariant, nonneg_pairs=None) -> sdp.SdpProblem:
    """max sum(M) over trace-one psd M with the variant's entry constraints.

    Posed as ``min <-J, M>``.  For theta' the entrywise nonnegativity is
    emitted only for ``nonneg_pairs`` (default: every non-edge).
    """
    n = g.n
    B = sdp.SdpBuilder()
    B.add_block(n, -np.ones((n, n)))
    idx = np.arange(n)
    B.add_constraints([1.0], (np.zeros(n, int), 0, idx, idx, 1.0))
    e = np.array(g.edges, dtype=int).reshape(-1, 2)
    if v is ThetaVariant.THETA_PLUS:
        # M_ij + s = 0, s >= 0
        s0 = B.add_lp(len(e))
        k = np.arange(len(e))
        B.add_constraints(np.zeros(len(e)), (k, 0, e[:, 0], e[:, 1], 0.5), (k, s0 + k, 1.0))
    else:
        k = np.arange(len(e))
        B.add_constraints(np.zeros(len(e)), (k, 0, e[:, 0], e[:, 1], 0.5))
    if v is ThetaVariant.THETA_PRIME:
        pairs = np.array(g.non_edges() if nonneg_pairs is None else nonneg_pairs, dtype=int).reshape(-1, 2)
        if len(pairs):
            s0 = B.add_lp(len(pairs))
            k = np.arange(len(pairs))
            # M_ij - s = 0, s >= 0
            B.add_constraints(np.zeros(len(pairs)), (k, 0, pairs[:, 0], pairs[:, 1], 0.5), (k, s0 + k, -1.0))
    return B.build()


def build_dual(g: Graph, v: ThetaVariant) -> sdp.SdpProblem:
    """min t over psd kernels K with K(x,x) = t - 1, posed as ``min K_00``.

    - theta':  K(x,y) <= -1 on non-edges
    - theta:   K(x,y) == -1 on non-edges
    - theta+:  K(x,y) == -1 on non-edges and K(x,y) >= -1 on edges
    """
    n = g.n
    B = sdp.SdpBuilder()
    C = np.zeros((n, n))
    C[0, 0] = 1.0
    B.add_block(n, C)
    if n > 1:
        # K_ii - K_00 = 0
        k = np.repeat(np.arange(n - 1), 2)
        rows = np.column_stack([np.arange(1, n), np.zeros(n - 1, int)]).ravel()
        vals = np.tile([1.0, -1.0], n - 1)
        B.add_constraints(np.zeros(n - 1), (k, 0, rows, rows, vals))
    ne = np.array(g.non_edges(), dtype=int).reshape(-1, 2)
    kk = np.arange(len(ne))
    if v is ThetaVariant.THETA_PRIME and len(ne):
        s0 = B.add_lp(len(ne))
        B.add_constraints(-np.ones(len(ne)), (kk, 0, ne[:, 0], ne[:, 1], 0.5), (kk, s0 + kk, 1.0))
    elif len(ne):
        B.add_constraints(-np.ones(len(ne)), (kk, 0, ne[:, 0], ne[:, 1], 0.5))
    if v is ThetaVariant.THETA_PLUS and g.m:
        e = np.array(g.edges, dtype=int)
        k = np.arange(len(e))
        s0 = B.add_lp(len(e))
        B.add_constraints(-np.ones(len(e)), (k, 0, e[:, 0], e[:, 1], 0.5), (k, s0 + k, -1.0))
    return B.build()


def _solve_checked(p, opts):
    sol = sdp.solve(p, opts)
    if sol.status != sdp.OPTIMAL:
        raise SolverFailure(sol.status)
    return sol


def theta_primal_result(g: Graph, v, caps: Caps = DEFAULT_CAPS, opts: Optional[sdp.SolverOptions] = None,
                        method: str = "auto") -> ThetaResult:
    """Solve the matrix program.

    For theta' with many non-edges (``method="auto"``) nonnegativity is
    imposed by an exact active-set loop: solve with the currently active
    pairs, add every non-edge where M went negative, repeat.  The final M is
    feasible for the full program and the restricted dual is feasible for the
    full dual, so the value is exact, not approximate.
    """
    v = ThetaVariant.parse(v)
    _check_caps(g, v, caps)
    t0 = time.perf_counter()
    if g.n == 0:
        return ThetaResult(v, 0, 0.0, 0.0, 0.0, sdp.OPTIMAL, 0.0, np.zeros((0, 0)), True)
    non_edges = g.non_edges()
    use_active = v is ThetaVariant.THETA_PRIME and (
        method == "active" or (method == "auto" and len(non_edges) > 1500))
    rounds = 1
    if not use_active:
        p = build_primal(g, v)
        sol = _solve_checked(p, opts)
    else:
        ne = np.array(non_edges, dtype=int).reshape(-1, 2)
        active = np.zeros(len(ne), dtype=bool)
        while True:
            p = build_primal(g, v, ne[active])
            sol = _solve_checked(p, opts)
            M = sol.X[0]
            vals = M[ne[:, 0], ne[:, 1]]
            # also activate pairs sitting on the boundary to avoid ping-pong
            viol = (~active) & (vals < 1e-9)
            if not np.any(vals[~active] < -PSD_TOL):
                break
            active |= viol
            rounds += 1
    M = sol.X[0]
    cert = sdp.certify(sol, p)
    return ThetaResult(v, g.n, -sol.primal_obj, -sol.dual_obj, sol.gap, sol.status,
                       (time.perf_counter() - t0) * 1e3, M, cert.passed, rounds)


def theta_primal(g: Graph, v, caps: Caps = DEFAULT_CAPS, opts=None) -> float:
    return theta_primal_result(g, v, caps, opts).value


def theta_dual_result(g: Graph, v, caps: Caps = DEFAULT_CAPS, opts=None) -> ThetaResult:
    """Solve the kernel program; ``matrix`` holds the optimal kernel K."""
    v = ThetaVariant.parse(v)
    _check_caps(g, v, caps)
    t0 = time.perf_counter()
    if g.n == 0:
        return ThetaResult(v, 0, 0.0, 0.0, 0.0, sdp.OPTIMAL, 0.0, np.zeros((0, 0)), True)
    p = build_dual(g, v)
    sol = _solve_checked(p, opts)
    cert = sdp.certify(sol, p)
    return ThetaResult(v, g.n, sol.primal_obj + 1.0, sol.dual_obj + 1.0, sol.gap, sol.status,
                       (time.perf_counter() - t0) * 1e3, sol.X[0], cert.passed)


def theta_dual(g: Graph, v, caps: Caps = DEFAULT_CAPS, opts=None) -> float:
    return theta_dual_result(g, v, caps, opts).value


# ---------------------------------------------------------------- feasibility checks

def primal_violation(g: Graph, M: np.ndarray, v) -> float:
    """Largest violation of the matrix program's constraints by M (0 when feasible)."""
    v = ThetaVariant.parse(v)
    M = np.asarray(M, dtype=float)
    worst = max(abs(np.trace(M) - 1.0), float(np.max(np.abs(M - M.T))) if M.size else 0.0,
                -float(np.linalg.eigvalsh((M + M.T) / 2)[0]) if M.size else 0.0)
    for i, j in g.edges:
        worst = max(worst, M[i, j] if v is ThetaVariant.THETA_PLUS else abs(M[i, j]))
    if v is ThetaVariant.THETA_PRIME and M.size:
        worst = max(worst, -float(M.min()))
    return max(worst, 0.0)


def dual_violation(g: Graph, K: np.ndarray, v) -> float:
    """Largest violation of the kernel program's constraints by K (0 when feasible)."""
    v = ThetaVariant.parse(v)
    K = np.asarray(K, dtype=float)
    if K.size == 0:
        return 0.0
    d = np.diag(K)
    worst = max(float(d.max() - d.min()), float(np.max(np.abs(K - K.T))),
                -float(np.linalg.eigvalsh((K + K.T) / 2)[0]))
    for i, j in g.non_edges():
        if v is ThetaVariant.THETA_PRIME:
            worst = max(worst, K[i, j] + 1.0)
        else:
            worst = max(worst, abs(K[i, j] + 1.0))
    if v is ThetaVariant.THETA_PLUS:
        for i, j in g.edges:
            worst = max(worst, -1.0 - K[i, j])
    return max(worst, 0.0)


def join_additivity_witness(g: Graph, gK, h: Graph, hK, v, tol: float = PSD_TOL) -> np.ndarray:
    """Combine dual kernels for g and h into one for their disjoint union.

    With t_G, t_H the kernels' values and a2 = t_H / t_G::

        K = (a2 + 1) K_G  (+)  (1/a2 + 1) K_H  +  L,
        L = a2 on G x G, 1/a2 on H x H, -1 on the cross blocks,

    which is psd, feasible, and has constant diagonal t_G + t_H - 1.
    """
    v = ThetaVariant.parse(v)
    gK = np.asarray(gK, dtype=float)
    hK = np.asarray(hK, dtype=float)
    for name, graph, K in (("G", g, gK), ("H", h, hK)):
        viol = dual_violation(graph, K, v)
        if viol > tol:
            raise InfeasibleInput(f"kernel for {name} violates {v.value} dual constraints by {viol:.3e}")
    tG = float(np.mean(np.diag(gK))) + 1.0
    tH = float(np.mean(np.diag(hK))) + 1.0
    a2 = tH / tG
    n, m = g.n, h.n
    K = np.empty((n + m, n + m))
    K[:n, :n] = (a2 + 1.0) * gK + a2
    K[n:, n:] = (1.0 / a2 + 1.0) * hK + 1.0 / a2
    K[:n, n:] = -1.0
    K[n:, :n] = -1.0
    return K


# ---------------------------------------------------------------- point configurations

class _Cache:
    """Bound values keyed by (conflict-graph hash, variant); last writer wins."""

    def __init__(self):
        self._data = {}
        self._lock = threading.Lock()

    def get(self, key):
        with self._lock:
            return self._data.get(key)

    def put(self, key, value):
        with self._lock:
            self._data[key] = value

    def clear(self):
        with self._lock:
            self._data.clear()


CACHE = _Cache()


def theta_bound_on_points(c: PointConfiguration, v, caps: Caps = DEFAULT_CAPS, opts=None,
                          use_cache: bool = True) -> float:
    """theta-variant of the conflict graph (edges: 0 < |x - y| < 2)."""
    v = ThetaVariant.parse(v)
    g = conflict_graph(c)
    key = (g.key(), v.value)
    if use_cache:
        hit = CACHE.get(key)
        if hit is not None:
            return hit
    value = theta_primal(g, v, caps, opts)
    if use_cache:
        CACHE.put(key, value)
    return value


def sandwich_holds(values, tol: float = BOUND_TOL) -> bool:
    """True when ``values`` is nondecreasing up to ``tol``."""
    return all(a <= b + tol for a, b in zip(values, values[1:]))
