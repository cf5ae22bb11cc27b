"""Finite point configurations in R^d and the geometric side of packing bounds.

Packing radius is fixed at 1, so two points conflict when they are closer
than 2.  ``pack`` and ``cov`` are computed exactly; the simplicial helpers
(``triangulate_box``, ``barycentric_locate``, ``lift_kernel``) lift kernels
given on mesh vertices to arbitrary points of the triangulated region.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional, Sequence

import numpy as np

from .config import COVER_TOL, DEFAULT_CAPS, GEOM_TOL, PSD_TOL, Caps
from .errors import NotPSD, OutsideComplex, ParseError, SizeCapExceeded
from .graphs import Graph, independence_number


class PointConfiguration:
    """An immutable finite set of points in R^dim.

    Points closer than ``tol`` to each other are rejected: the
    configuration is a set, not a multiset.
    """

    __slots__ = ("dim", "points", "tol", "_dist")

    def __init__(self, points, dim: Optional[int] = None, tol: float = GEOM_TOL):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1) if dim in (None, 1) else pts.reshape(-1, dim)
        if pts.size == 0:
            pts = np.zeros((0, dim or 1))
        if dim is not None and pts.shape[1] != dim:
            raise ValueError(f"points have dimension {pts.shape[1]}, expected {dim}")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "dim", pts.shape[1])
        object.__setattr__(self, "tol", tol)
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt((diff**2).sum(axis=-1))
        dist.setflags(write=False)
        object.__setattr__(self, "_dist", dist)
        n = len(pts)
        if n > 1:
            iu = np.triu_indices(n, 1)
            if np.any(dist[iu] <= tol):
                raise ValueError("duplicate points (within tolerance)")

    def __setattr__(self, name, value):
        raise AttributeError("PointConfiguration is immutable")

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return f"PointConfiguration(dim={self.dim}, n={len(self)})"

    @property
    def distances(self) -> np.ndarray:
        return self._dist

    def transform(self, fn) -> "PointConfiguration":
        return PointConfiguration(fn(np.array(self.points)), self.dim, self.tol)

    def scaled(self, factor: float) -> "PointConfiguration":
        return self.transform(lambda p: p * factor)

    def union(self, other: "PointConfiguration") -> "PointConfiguration":
        return PointConfiguration(np.vstack([self.points, other.points]), self.dim, self.tol)

    def subset(self, idx: Sequence[int]) -> "PointConfiguration":
        return PointConfiguration(self.points[list(idx)], self.dim, self.tol)

    def to_text(self) -> str:
        rows = [f"{self.dim} {len(self)}"]
        rows += [" ".join(repr(float(x)) for x in p) for p in self.points]
        return "\n".join(rows) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PointConfiguration":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        try:
            d, n = int(rows[0][0]), int(rows[0][1])
            pts = [[float(x) for x in r] for r in rows[1:]]
        except (IndexError, ValueError) as exc:
            raise ParseError(f"malformed point file: {exc}") from exc
        if len(pts) != n or any(len(p) != d for p in pts):
            raise ParseError(f"expected {n} rows of {d} coordinates")
        try:
            return cls(np.array(pts).reshape(n, d), d)
        except ValueError as exc:
            raise ParseError(str(exc)) from exc


def read_points(path) -> PointConfiguration:
    try:
        with open(path) as fh:
            return PointConfiguration.from_text(fh.read())
    except OSError as exc:
        raise ParseError(str(exc)) from exc


def conflict_graph(c: PointConfiguration) -> Graph:
    """Edges join points at distance in (0, 2 - tol): they cannot both be centers."""
    n = len(c)
    i, j = np.nonzero(np.triu(c.distances < 2.0 - c.tol, 1))
    return Graph(n, list(zip(i.tolist(), j.tolist())))


def pack(c: PointConfiguration, caps: Caps = DEFAULT_CAPS) -> int:
    """Largest subset with pairwise distances >= 2."""
    return independence_number(conflict_graph(c), caps)


# ---------------------------------------------------------------- enclosing balls

def _circumball(pts: np.ndarray):
    """Smallest ball with all of ``pts`` on its boundary (center in their affine hull)."""
    p0 = pts[0]
    if len(pts) == 1:
        return p0.copy(), 0.0
    q = pts[1:] - p0
    gram = q @ q.T
    rhs = 0.5 * np.diag(gram)
    lam, *_ = np.linalg.lstsq(gram, rhs, rcond=None)
    center = p0 + lam @ q
    radius = float(max(np.linalg.norm(pts - center, axis=1)))
    return center, radius


def _welzl(pts: np.ndarray, dim: int):
    # Welzl recursion: mb(end, R) is the smallest ball enclosing pts[:end] with R on its boundary
    def inside(c, r, p):
        return np.linalg.norm(p - c) <= r * (1 + 1e-12) + 1e-15

    def mb(end: int, boundary: list):
        if len(boundary) == dim + 1 or end == 0:
            if not boundary:
                return np.zeros(dim), -1.0
            return _circumball(np.array(boundary))
        c, r = mb(end - 1, boundary)
        p = pts[end - 1]
        if r >= 0 and inside(c, r, p):
            return c, r
        return mb(end - 1, boundary + [p])

    return mb(len(pts), [])


def min_enclosing_ball(points) -> tuple:
    """Exact smallest enclosing ball ``(center, radius)`` via Welzl's algorithm.

    Points are shuffled with a fixed seed so results are reproducible.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] == 0:
        raise ValueError("need at least one point")
    order = list(range(len(pts)))
    random.Random(len(pts)).shuffle(order)
    center, radius = _welzl(pts[order], pts.shape[1])
    # Welzl returns a ball through its support; measure the radius directly
    radius = float(np.max(np.linalg.norm(pts - center, axis=1)))
    return center, radius


def brute_force_meb_radius(points) -> float:
    """Minimum over support subsets of size <= d+1 of enclosing circumballs; test oracle."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    best = math.inf
    for k in range(1, min(len(pts), pts.shape[1] + 1) + 1):
        for sub in itertools.combinations(range(len(pts)), k):
            c, _ = _circumball(pts[list(sub)])
            r = float(np.max(np.linalg.norm(pts - c, axis=1)))
            best = min(best, r)
    return best


# ---------------------------------------------------------------- covering

def cov(c: PointConfiguration, caps: Caps = DEFAULT_CAPS) -> int:
    """Minimum number of open unit balls covering ``c``.

    Realized as the minimum number of parts in a partition of the points
    whose parts each have enclosing radius < 1 - COVER_TOL.
    """
    n = len(c)
    if n > caps.cov:
        raise SizeCapExceeded("cov", n, caps.cov)
    if n == 0:
        return 0
    pts = np.asarray(c.points)
    # far[i]: points that can never share an open unit ball with i
    far_bits = [0] * n
    far = c.distances >= 2.0 - c.tol
    for i in range(n):
        for j in np.nonzero(far[i])[0]:
            far_bits[i] |= 1 << int(j)
    feasible_memo = {}

    def feasible(mask: int) -> bool:
        hit = feasible_memo.get(mask)
        if hit is None:
            idx = [k for k in range(n) if mask >> k & 1]
            hit = min_enclosing_ball(pts[idx])[1] < 1.0 - COVER_TOL
            feasible_memo[mask] = hit
        return hit

    # greedy upper bound: first-fit
    clusters = []
    for v in range(n):
        for k, m in enumerate(clusters):
            if not (far_bits[v] & m) and feasible(m | 1 << v):
                clusters[k] = m | 1 << v
                break
        else:
            clusters.append(1 << v)
    best = [len(clusters)]

    def lower_bound(clusters, v):
        # points that fit no open cluster and are pairwise far apart each need a new ball
        stuck = []
        for u in range(v, n):
            if all(far_bits[u] & m for m in clusters) and all(far_bits[u] >> w & 1 for w in stuck):
                stuck.append(u)
        return len(clusters) + len(stuck)

    def rec(v: int, clusters: list):
        if v == n:
            best[0] = min(best[0], len(clusters))
            return
        if lower_bound(clusters, v) >= best[0]:
            return
        bit = 1 << v
        for k, m in enumerate(clusters):
            if not (far_bits[v] & m) and feasible(m | bit):
                clusters[k] = m | bit
                rec(v + 1, clusters)
                clusters[k] = m
        if len(clusters) + 1 < best[0]:
            clusters.append(bit)
            rec(v + 1, clusters)
            clusters.pop()

    rec(0, [])
    return best[0]


def brute_force_cov(c: PointConfiguration) -> int:
    """Enumerate all set partitions; test oracle for n <= 8."""
    pts = np.asarray(c.points)
    n = len(pts)

    def partitions(items):
        if not items:
            yield []
            return
        first, rest = items[0], items[1:]
        for part in partitions(rest):
            for k in range(len(part)):
                yield part[:k] + [[first] + part[k]] + part[k + 1:]
            yield [[first]] + part

    best = n
    for part in partitions(list(range(n))):
        if len(part) < best and all(min_enclosing_ball(pts[b])[1] < 1.0 - COVER_TOL for b in part):
            best = len(part)
    return best


def cube_mesh(n: int, r: float, h: float) -> PointConfiguration:
    """Grid (h Z)^n intersected with [0, r]^n."""
    if h <= 0:
        raise ValueError("spacing must be positive")
    k = int(math.floor(r / h + 1e-9))
    axis = np.arange(k + 1) * h
    grid = np.array(list(itertools.product(axis, repeat=n)), dtype=float).reshape(-1, n)
    return PointConfiguration(grid, n)


# ---------------------------------------------------------------- axiom cases

class AxiomCase(NamedTuple):
    """One randomized instance of a packing-bound axiom.

    ``relation`` says how the bound values of ``configs`` must compare:

    - ``"eq1"``: A(configs[0]) == 1
    - ``"le"``: A(configs[0]) <= A(configs[1])
    - ``"eq"``: A(configs[0]) == A(configs[1])
    - ``"sum"``: A(configs[0]) == A(configs[1]) + A(configs[2])
    """

    axiom: str
    configs: tuple
    relation: str
    note: str = ""


AXIOMS = ("sphere", "lipschitz", "union", "mesh")


def _random_rotation(dim, rng):
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)))
    return q * np.sign(np.diag(r))


def _random_config(rng, dim, n, spread):
    while True:
        pts = rng.uniform(0, spread, size=(n, dim))
        try:
            return PointConfiguration(pts, dim)
        except ValueError:
            continue


def axiom_case_generator(seed: int, per_axiom: int = 200, max_points: int = 12,
                         axioms: Sequence[str] = AXIOMS) -> Iterator[AxiomCase]:
    """Deterministic stream of test cases, ``per_axiom`` for each axiom.

    Dimensions are drawn from 1..3.  Union cases keep each half at most
    ``max_points // 2`` points so the union stays within ``max_points``.
    """
    rng = np.random.default_rng(seed)
    for axiom in axioms:
        for k in range(per_axiom):
            dim = int(rng.integers(1, 4))
            if axiom == "sphere":
                n = int(rng.integers(1, min(5, max_points) + 1))
                u = rng.normal(size=(n, dim))
                u /= np.linalg.norm(u, axis=1, keepdims=True)
                radii = 0.9 * rng.uniform(0, 1, size=(n, 1)) ** (1 / dim)
                c = PointConfiguration(u * radii, dim)
                yield AxiomCase(axiom, (c,), "eq1", "points inside B_0.9(0)")
            elif axiom == "lipschitz":
                n = int(rng.integers(2, max_points + 1))
                c = _random_config(rng, dim, n, spread=1.5 * n ** (1 / dim) + 1)
                if k % 2 == 0:
                    rot = _random_rotation(dim, rng)
                    shift = rng.normal(scale=5.0, size=dim)
                    img = c.transform(lambda p: p @ rot.T + shift)
                    yield AxiomCase(axiom, (c, img), "eq", "isometry")
                else:
                    factors = rng.uniform(1.0, 1.6, size=dim)
                    img = c.transform(lambda p: p * factors)
                    yield AxiomCase(axiom, (c, img), "le", "coordinate dilation")
            elif axiom == "union":
                half = max(1, max_points // 2)
                c1 = _random_config(rng, dim, int(rng.integers(1, half + 1)), 3.0)
                c2 = _random_config(rng, dim, int(rng.integers(1, half + 1)), 3.0)
                # shift c2 along e_1 so the gap is at least 2
                gap = 2.0 + float(rng.uniform(0, 0.5))
                shift = np.zeros(dim)
                shift[0] = c1.points[:, 0].max() - c2.points[:, 0].min() + gap
                c2 = c2.transform(lambda p: p + shift)
                yield AxiomCase(axiom, (c1.union(c2), c1, c2), "sum", f"gap {gap:.3f}")
            elif axiom == "mesh":
                eps = float(rng.uniform(0.05, 0.5))
                h = float(rng.uniform(0.6, 1.6))
                side = int(rng.integers(1, 4)) if dim < 3 else 1
                grid = cube_mesh(dim, side * h, h)
                if len(grid) > max_points:
                    grid = grid.subset(range(max_points))
                n = int(rng.integers(1, max_points + 1))
                anchors = grid.points[rng.integers(0, len(grid), size=n)]
                step = rng.normal(size=(n, dim))
                step *= (0.999 * eps * rng.uniform(0, 1, size=(n, 1))) / np.linalg.norm(step, axis=1, keepdims=True)
                pts = anchors + step
                try:
                    c = PointConfiguration(pts, dim)
                except ValueError:
                    c = PointConfiguration(anchors[:1] + step[:1], dim)
                yield AxiomCase(axiom, (c.scaled(1 / (1 + eps)), grid), "le", f"eps {eps:.3f}")
            else:
                raise ValueError(f"unknown axiom {axiom!r}")


# ---------------------------------------------------------------- simplicial machinery

@dataclass(frozen=True)
class SimplicialComplex:
    vertices: PointConfiguration
    top_simplices: tuple
    mesh: float

    def check(self, tol: float = 1e-12) -> None:
        """Validate non-degeneracy, diameters and face-compatibility (combinatorial)."""
        pts = self.vertices.points
        d = self.vertices.dim
        faces = {}
        for s in self.top_simplices:
            if len(s) != d + 1:
                raise ValueError("top simplices must have d+1 vertices")
            v = pts[list(s)]
            if abs(np.linalg.det(v[1:] - v[0])) <= tol:
                raise ValueError(f"degenerate simplex {s}")
            diam = max(np.linalg.norm(a - b) for a, b in itertools.combinations(v, 2))
            if diam >= self.mesh:
                raise ValueError(f"simplex {s} has diameter {diam} >= {self.mesh}")
            for face in itertools.combinations(sorted(s), d):
                faces[face] = faces.get(face, 0) + 1
        if any(cnt > 2 for cnt in faces.values()):
            raise ValueError("a codimension-one face is shared by more than two simplices")


class BarycentricPoint(NamedTuple):
    simplex: int
    weights: np.ndarray


def triangulate_box(n: int, r: float, eps: float) -> SimplicialComplex:
    """Kuhn (Freudenthal) triangulation of [0, r]^n with simplex diameters < eps.

    The box is cut into k^n cubes of side r/k with side*sqrt(n) < eps and each
    cube into n! simplices along its main diagonal.
    """
    if n > 3:
        raise ValueError("triangulate_box supports n <= 3")
    k = math.ceil(r * math.sqrt(n) / eps)
    if abs(k - r * math.sqrt(n) / eps) < 1e-12:
        k += 1
    side = r / k
    verts = cube_mesh(n, r, side)
    stride = [(k + 1) ** (n - 1 - a) for a in range(n)]

    def index(corner):
        return sum(c * s for c, s in zip(corner, stride))

    simplices = []
    for corner in itertools.product(range(k), repeat=n):
        for perm in itertools.permutations(range(n)):
            cur = list(corner)
            simplex = [index(cur)]
            for axis in perm:
                cur[axis] += 1
                simplex.append(index(cur))
            simplices.append(tuple(simplex))
    return SimplicialComplex(verts, tuple(simplices), eps)


def _simplex_frames(sc: SimplicialComplex):
    pts = sc.vertices.points
    simp = np.array(sc.top_simplices)
    origin = pts[simp[:, 0]]
    edges = pts[simp[:, 1:]] - origin[:, None, :]
    inv = np.linalg.inv(np.transpose(edges, (0, 2, 1)))
    return simp, origin, inv


_FRAME_CACHE = {}


def barycentric_locate(y, sc: SimplicialComplex, tol: float = 1e-12) -> BarycentricPoint:
    """Barycentric coordinates of ``y`` in the first simplex containing it."""
    key = id(sc)
    frames = _FRAME_CACHE.get(key)
    if frames is None or frames[0] is not sc:
        frames = (sc, _simplex_frames(sc))
        _FRAME_CACHE[key] = frames
    simp, origin, inv = frames[1]
    y = np.asarray(y, dtype=float).reshape(-1)
    mu = np.einsum("sij,sj->si", inv, y[None, :] - origin)
    lam = np.hstack([1.0 - mu.sum(axis=1, keepdims=True), mu])
    ok = np.nonzero(lam.min(axis=1) >= -tol)[0]
    if len(ok) == 0:
        raise OutsideComplex(f"point {y} lies outside the complex")
    s = int(ok[0])
    w = lam[s].copy()
    w[np.abs(w) < tol] = 0.0
    w = np.clip(w, 0.0, None)
    w /= w.sum()
    return BarycentricPoint(s, w)


def barycentric_matrix(xs, sc: SimplicialComplex) -> np.ndarray:
    """Rows are barycentric weights of each sample point over all mesh vertices."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    out = np.zeros((len(xs), len(sc.vertices)))
    for row, x in enumerate(xs):
        bp = barycentric_locate(x, sc)
        out[row, list(sc.top_simplices[bp.simplex])] += bp.weights
    return out


def lift_kernel(K, sc: SimplicialComplex, xs, tol: float = PSD_TOL) -> np.ndarray:
    """L(x, y) = sum_ij a_i(x) b_j(y) K(v_i, v_j) for barycentric weights a, b."""
    K = np.asarray(K, dtype=float)
    if K.shape != (len(sc.vertices),) * 2:
        raise ValueError("kernel must be indexed by the complex vertices")
    if not np.allclose(K, K.T, atol=tol):
        raise NotPSD("kernel is not symmetric")
    lo = float(np.linalg.eigvalsh((K + K.T) / 2).min())
    if lo < -tol:
        raise NotPSD(f"kernel has eigenvalue {lo:.3e}")
    W = barycentric_matrix(xs, sc)
    return W @ K @ W.T
