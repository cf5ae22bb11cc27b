"""Finite loopless graphs, the join/union/complement operations, and exact
alpha, omega and chi.

Adjacency is kept as one Python int per vertex used as a bitset, so the
candidate sets in the branch-and-bound searches are intersected a whole
machine word (or more) at a time.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .config import DEFAULT_CAPS, Caps
from .errors import ParseError, SizeCapExceeded


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True)
class Graph:
    """Immutable simple graph on vertices ``0..n-1``.

    ``edges`` is the sorted tuple of pairs ``(i, j)`` with ``i < j``.
    """

    n: int
    edges: tuple = ()
    labels: Optional[tuple] = None
    adj: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("vertex count must be nonnegative")
        norm = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i},{j}) out of range for n={self.n}")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", tuple(sorted(norm)))
        if self.labels is not None:
            if len(self.labels) != self.n:
                raise ValueError("labels must have one entry per vertex")
            object.__setattr__(self, "labels", tuple(self.labels))
        adj = [0] * self.n
        for i, j in self.edges:
            adj[i] |= 1 << j
            adj[j] |= 1 << i
        object.__setattr__(self, "adj", tuple(adj))

    @classmethod
    def from_adjacency(cls, matrix) -> "Graph":
        n = len(matrix)
        return cls(n, [(i, j) for i in range(n) for j in range(i + 1, n) if matrix[i][j]])

    @property
    def m(self) -> int:
        return len(self.edges)

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self.adj[i] >> j & 1)

    def neighbors(self, v: int) -> list:
        return list(_bits(self.adj[v]))

    def non_edges(self) -> list:
        return [(i, j) for i in range(self.n) for j in range(i + 1, self.n) if not self.has_edge(i, j)]

    def induced(self, vertices: Sequence[int]) -> "Graph":
        vs = list(vertices)
        pos = {v: k for k, v in enumerate(vs)}
        edges = [(pos[i], pos[j]) for i, j in self.edges if i in pos and j in pos]
        labels = None if self.labels is None else tuple(self.labels[v] for v in vs)
        return Graph(len(vs), edges, labels)

    def key(self) -> str:
        """Hash of the labelled structure (n and edge list); labels excluded."""
        h = hashlib.sha1(f"{self.n}:".encode())
        h.update(",".join(f"{i}-{j}" for i, j in self.edges).encode())
        return h.hexdigest()

    def to_text(self) -> str:
        lines = [f"{self.n} {self.m}"] + [f"{i} {j}" for i, j in self.edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Graph":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        try:
            n, m = int(rows[0][0]), int(rows[0][1])
            edges = [(int(r[0]), int(r[1])) for r in rows[1:]]
        except (IndexError, ValueError) as exc:
            raise ParseError(f"malformed graph text: {exc}") from exc
        if len(edges) != m:
            raise ParseError(f"header declares {m} edges, found {len(edges)}")
        try:
            return cls(n, edges)
        except ValueError as exc:
            raise ParseError(str(exc)) from exc


def complete(n: int) -> Graph:
    return Graph(n, itertools.combinations(range(n), 2))


def empty(n: int) -> Graph:
    return Graph(n, ())


def cycle(n: int) -> Graph:
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def path(n: int) -> Graph:
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def random_graph(n: int, p: float, rng) -> Graph:
    return Graph(n, [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p])


def complement(g: Graph) -> Graph:
    return Graph(g.n, g.non_edges(), g.labels)


def join(g: Graph, h: Graph) -> Graph:
    """All edges of g and h plus every cross pair."""
    off = g.n
    edges = list(g.edges) + [(i + off, j + off) for i, j in h.edges]
    edges += [(i, off + j) for i in range(g.n) for j in range(h.n)]
    return Graph(g.n + h.n, edges, _cat_labels(g, h))


def disjoint_union(g: Graph, h: Graph) -> Graph:
    off = g.n
    edges = list(g.edges) + [(i + off, j + off) for i, j in h.edges]
    return Graph(g.n + h.n, edges, _cat_labels(g, h))


def _cat_labels(g, h):
    if g.labels is None and h.labels is None:
        return None
    gl = g.labels or (None,) * g.n
    hl = h.labels or (None,) * h.n
    return gl + hl


def _check_cap(what, size, cap):
    if size > cap:
        raise SizeCapExceeded(what, size, cap)


def _clique_cover_bound(adj, cand: int):
    """Greedy partition of ``cand`` into cliques.

    Returns vertices in order of increasing bound together with the
    number of cliques used up to and including each vertex.  An
    independent set meets each clique at most once.
    """
    order, bounds = [], []
    k = 0
    rest = cand
    while rest:
        k += 1
        q = rest
        while q:
            v = (q & -q).bit_length() - 1
            rest &= ~(1 << v)
            q &= adj[v]
            order.append(v)
            bounds.append(k)
    return order, bounds


def independence_number(g: Graph, caps: Caps = DEFAULT_CAPS, witness: bool = False):
    """Exact alpha(g) by branch and bound with clique-cover pruning.

    With ``witness=True`` returns ``(alpha, vertices)``.
    """
    _check_cap("independence_number", g.n, caps.alpha)
    full = (1 << g.n) - 1
    # non-neighbourhoods restricted to other vertices
    nonadj = [full & ~a & ~(1 << v) for v, a in enumerate(g.adj)]
    best = [0, 0]

    def expand(chosen: int, size: int, cand: int):
        order, bounds = _clique_cover_bound(g.adj, cand)
        for idx in range(len(order) - 1, -1, -1):
            if size + bounds[idx] <= best[0]:
                return
            v = order[idx]
            new_cand = cand & nonadj[v]
            new_chosen = chosen | (1 << v)
            if new_cand:
                expand(new_chosen, size + 1, new_cand)
            elif size + 1 > best[0]:
                best[0], best[1] = size + 1, new_chosen
            cand &= ~(1 << v)

    if g.n:
        expand(0, 0, full)
    if witness:
        return best[0], list(_bits(best[1]))
    return best[0]


def clique_number(g: Graph, caps: Caps = DEFAULT_CAPS) -> int:
    return independence_number(complement(g), caps)


def dsatur_coloring(g: Graph) -> list:
    """Greedy DSATUR coloring; returns a color per vertex."""
    colors = [-1] * g.n
    sat = [set() for _ in range(g.n)]
    deg = [bin(a).count("1") for a in g.adj]
    for _ in range(g.n):
        v = max((u for u in range(g.n) if colors[u] < 0), key=lambda u: (len(sat[u]), deg[u], -u))
        c = 0
        while c in sat[v]:
            c += 1
        colors[v] = c
        for u in _bits(g.adj[v]):
            sat[u].add(c)
    return colors


def _k_colorable(g: Graph, k: int):
    colors = [-1] * g.n
    # forbidden[v] is a bitmask of colors used by colored neighbours
    forbidden = [0] * g.n
    deg = [bin(a).count("1") for a in g.adj]

    def pick():
        best, key = -1, None
        for u in range(g.n):
            if colors[u] < 0:
                kk = (bin(forbidden[u]).count("1"), deg[u], -u)
                if key is None or kk > key:
                    best, key = u, kk
        return best

    def rec(colored: int, used: int) -> bool:
        if colored == g.n:
            return True
        v = pick()
        # colors beyond used+1 are symmetric to used
        for c in range(min(k, used + 1)):
            if forbidden[v] >> c & 1:
                continue
            colors[v] = c
            touched = []
            for u in _bits(g.adj[v]):
                if colors[u] < 0 and not forbidden[u] >> c & 1:
                    forbidden[u] |= 1 << c
                    touched.append(u)
            if rec(colored + 1, max(used, c + 1)):
                return True
            for u in touched:
                forbidden[u] &= ~(1 << c)
            colors[v] = -1
        return False

    return list(colors) if rec(0, 0) else None


def chromatic_number(g: Graph, caps: Caps = DEFAULT_CAPS, witness: bool = False):
    """Exact chi(g): binary search on k between omega and the DSATUR count."""
    _check_cap("chromatic_number", g.n, caps.chi)
    if g.n == 0:
        return (0, []) if witness else 0
    best_coloring = dsatur_coloring(g)
    hi = max(best_coloring) + 1
    lo = clique_number(g, caps.with_(alpha=max(caps.alpha, g.n)))
    while lo < hi:
        mid = (lo + hi) // 2
        col = _k_colorable(g, mid)
        if col is None:
            lo = mid + 1
        else:
            hi = mid
            best_coloring = col
    if witness:
        return hi, best_coloring
    return hi


@dataclass(frozen=True)
class GraphHom:
    source: Graph
    target: Graph
    map: tuple

    def __post_init__(self):
        if len(self.map) != self.source.n:
            raise ValueError("map must assign every source vertex")
        for u, v in self.source.edges:
            if not self.target.has_edge(self.map[u], self.map[v]):
                raise ValueError(f"edge ({u},{v}) not mapped to an edge")


def find_homomorphism(g: Graph, h: Graph, caps: Caps = DEFAULT_CAPS) -> Optional[GraphHom]:
    """Exhaustive backtracking search; vertices and images in lexicographic order."""
    _check_cap("find_homomorphism source", g.n, caps.homomorphism)
    _check_cap("find_homomorphism target", h.n, caps.homomorphism)
    image = [-1] * g.n

    def rec(v: int) -> bool:
        if v == g.n:
            return True
        allowed = (1 << h.n) - 1
        for u in _bits(g.adj[v] & ((1 << v) - 1)):
            allowed &= h.adj[image[u]]
        for w in _bits(allowed):
            image[v] = w
            if rec(v + 1):
                return True
        image[v] = -1
        return False

    if rec(0):
        return GraphHom(g, h, tuple(image))
    return None


def brute_force_alpha(g: Graph) -> int:
    """2^n enumeration; test oracle only."""
    best = 0
    for mask in range(1 << g.n):
        size = bin(mask).count("1")
        if size <= best:
            continue
        if all(not (g.adj[v] & mask) for v in _bits(mask)):
            best = size
    return best


def brute_force_chi(g: Graph) -> int:
    """Smallest k admitting a proper k-coloring by enumeration; test oracle only."""
    if g.n == 0:
        return 0
    for k in range(1, g.n + 1):
        for colors in itertools.product(range(k), repeat=g.n):
            if all(colors[i] != colors[j] for i, j in g.edges):
                return k
    return g.n


def read_graph(path) -> Graph:
    try:
        with open(path) as fh:
            return Graph.from_text(fh.read())
    except OSError as exc:
        raise ParseError(str(exc)) from exc

