"""Wired uniform spanning trees, their dual loop and the exploration process.

Trees live on the contracted graph in which every Dirichlet vertex is glued to a
single root.  A tree is stored as one parent slot per interior vertex: the index
of the link (in the graph's neighbour table) leading to the parent.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numba
import numpy as np

from .errors import MultipleCycles, NotAnnular, NoWiredBoundary
from .grid import (
    DIRECTIONS,
    LINK_DIRICHLET,
    LINK_FREE,
    Hull,
    LatticeCut,
    LatticeDomain,
    Vertex,
    edge_key,
    euler_characteristic,
    face_corners,
    faces_of_edge,
    interior_components,
    polyline_distance,
)

LINK_ABSENT = -3


# -- random streams ---------------------------------------------------------


def spawn_seed(master_seed: int, *key: int) -> int:
    """32-bit seed for the stream identified by ``key`` under ``master_seed``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _as_seed(rng_stream) -> int:
    if isinstance(rng_stream, np.random.Generator):
        return int(rng_stream.integers(0, 2**32 - 1))
    if rng_stream is None:
        return int(np.random.default_rng().integers(0, 2**32 - 1))
    return int(rng_stream) % (2**32)


# -- graphs -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GraphTable:
    """Neighbour table of the contracted graph.

    ``table[v, s]`` is an interior index, ``LINK_DIRICHLET`` (edge to the wired
    root), ``LINK_FREE`` (reflecting link) or ``LINK_ABSENT`` (padding).
    ``targets[v][s]`` names the wired vertex reached by a Dirichlet link.
    """

    labels: tuple
    table: np.ndarray
    targets: tuple

    @cached_property
    def index(self) -> dict:
        return {v: k for k, v in enumerate(self.labels)}

    @property
    def size(self) -> int:
        return len(self.labels)


def plain_graph(edges: Iterable[tuple], wired: Iterable) -> GraphTable:
    """Contracted graph of an arbitrary simple graph with the given wired vertices."""
    wired = set(wired)
    adj: dict = {}
    for u, w in edges:
        adj.setdefault(u, []).append(w)
        adj.setdefault(w, []).append(u)
    labels = tuple(sorted(v for v in adj if v not in wired))
    index = {v: k for k, v in enumerate(labels)}
    width = max((len(adj[v]) for v in labels), default=1)
    table = np.full((len(labels), width), LINK_ABSENT, dtype=np.int64)
    targets = []
    for k, v in enumerate(labels):
        row = [None] * width
        for s, u in enumerate(sorted(adj[v])):
            if u in wired:
                table[k, s] = LINK_DIRICHLET
                row[s] = u
            else:
                table[k, s] = index[u]
        targets.append(tuple(row))
    return GraphTable(labels, table, tuple(targets))


def domain_graph(domain: LatticeDomain) -> GraphTable:
    cached = domain.__dict__.get("_graph")
    if cached is None:
        table, targets = domain.link_table
        cached = GraphTable(domain.interior, table, tuple(tuple(r) for r in targets))
        domain.__dict__["_graph"] = cached
    return cached


def _graph(obj) -> GraphTable:
    return obj if isinstance(obj, GraphTable) else domain_graph(obj)


def _check_wired(g: GraphTable) -> None:
    """Every interior component must reach the wired root."""
    n = g.size
    if n == 0 or g.__dict__.get("_wired_ok"):
        return
    reached = np.zeros(n, dtype=bool)
    stack = np.nonzero((g.table == LINK_DIRICHLET).any(axis=1))[0].tolist()
    if not stack:
        raise NoWiredBoundary("no wired boundary vertex")
    for v in stack:
        reached[v] = True
    while stack:
        v = stack.pop()
        for u in g.table[v]:
            if u >= 0 and not reached[u]:
                reached[u] = True
                stack.append(int(u))
    if not reached.all():
        raise NoWiredBoundary("some interior vertices cannot reach the wired boundary")
    g.__dict__["_wired_ok"] = True


# -- Wilson's algorithm -----------------------------------------------------


@numba.njit(cache=True)
def _wilson_kernel(table, seed):
    np.random.seed(seed)
    n, width = table.shape
    in_tree = np.zeros(n, dtype=np.bool_)
    slot = np.full(n, -1, dtype=np.int8)
    for s in range(n):
        u = s
        # random walk; overwriting the exit slot erases loops
        while not in_tree[u]:
            while True:
                d = np.random.randint(width)
                t = table[u, d]
                if t >= 0 or t == -1:
                    break
            slot[u] = d
            if t == -1:
                break
            u = t
        u = s
        while not in_tree[u]:
            in_tree[u] = True
            t = table[u, slot[u]]
            if t < 0:
                break
            u = t
    return slot


@numba.njit(cache=True)
def _wilson_batch(table, seeds):
    out = np.empty((seeds.shape[0], table.shape[0]), dtype=np.int8)
    for r in range(seeds.shape[0]):
        out[r] = _wilson_kernel(table, seeds[r])
    return out


@dataclass(frozen=True, eq=False)
class SpanningTree:
    graph: GraphTable
    slot: np.ndarray

    @cached_property
    def parent(self) -> dict:
        """Parent of each interior vertex; wired parents are the Dirichlet vertex hit."""
        g = self.graph
        out = {}
        for k, v in enumerate(g.labels):
            s = int(self.slot[k])
            t = g.table[k, s]
            out[v] = g.labels[t] if t >= 0 else g.targets[k][s]
        return out

    @cached_property
    def edge_set(self) -> frozenset:
        return frozenset(edge_key(v, p) if _orderable(v, p) else (v, p) for v, p in self.parent.items())

    def key(self) -> tuple:
        """Hashable identity of the tree (parent slots)."""
        return tuple(int(x) for x in self.slot)

    def is_valid(self) -> bool:
        g = self.graph
        n = g.size
        state = np.zeros(n, dtype=np.int8)  # 0 unknown, 1 in progress, 2 reaches root
        for s in range(n):
            path = []
            u = s
            while u >= 0 and state[u] == 0:
                state[u] = 1
                path.append(u)
                u = int(g.table[u, self.slot[u]])
                if u == LINK_FREE or u == LINK_ABSENT:
                    return False
            if u >= 0 and state[u] == 1:
                return False
            for x in path:
                state[x] = 2
        return True


def _orderable(a, b) -> bool:
    try:
        a < b
        return True
    except TypeError:
        return False


def wilson_sample(domain: LatticeDomain | GraphTable, rng_stream=None) -> SpanningTree:
    g = _graph(domain)
    _check_wired(g)
    return SpanningTree(g, _wilson_kernel(g.table, np.uint32(_as_seed(rng_stream))))


def wilson_slots(domain: LatticeDomain | GraphTable, seeds: Sequence[int]) -> np.ndarray:
    """Parent-slot arrays for many independent trees, one row per seed."""
    g = _graph(domain)
    _check_wired(g)
    return _wilson_batch(g.table, np.asarray(seeds, dtype=np.uint32))


# -- dual structure ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DualStructure:
    """Faces and shared edges of a lattice domain arranged for fast tree queries."""

    faces: tuple
    face_index: dict
    edges: tuple  # shared edges
    edge_faces: np.ndarray  # (m, 2) face indices
    lo_idx: np.ndarray  # interior index of the smaller endpoint or -1
    lo_dir: np.ndarray  # slot from smaller to larger endpoint
    hi_idx: np.ndarray
    hi_dir: np.ndarray
    csr_ptr: np.ndarray
    csr_edges: np.ndarray


def dual_structure(domain: LatticeDomain) -> DualStructure:
    cached = domain.__dict__.get("_dual")
    if cached is not None:
        return cached
    faces = tuple(sorted(domain.faces))
    findex = {f: k for k, f in enumerate(faces)}
    edges = tuple(sorted(domain.shared_edges))
    index = domain.interior_index
    m = len(edges)
    ef = np.empty((m, 2), dtype=np.int64)
    lo_idx = np.full(m, -1, dtype=np.int64)
    hi_idx = np.full(m, -1, dtype=np.int64)
    lo_dir = np.empty(m, dtype=np.int64)
    hi_dir = np.empty(m, dtype=np.int64)
    for k, e in enumerate(edges):
        a, b = faces_of_edge(e)
        ef[k] = (findex[a], findex[b])
        u, w = e
        horizontal = u[1] == w[1]
        lo_idx[k] = index.get(u, -1)
        hi_idx[k] = index.get(w, -1)
        lo_dir[k] = 0 if horizontal else 1
        hi_dir[k] = 2 if horizontal else 3
    counts = np.zeros(len(faces) + 1, dtype=np.int64)
    for a, b in ef:
        counts[a + 1] += 1
        counts[b + 1] += 1
    ptr = np.cumsum(counts)
    fill = ptr[:-1].copy()
    csr = np.empty(2 * m, dtype=np.int64)
    for k, (a, b) in enumerate(ef):
        csr[fill[a]] = k
        fill[a] += 1
        csr[fill[b]] = k
        fill[b] += 1
    out = DualStructure(faces, findex, edges, ef, lo_idx, lo_dir, hi_idx, hi_dir, ptr, csr)
    domain.__dict__["_dual"] = out
    return out


@numba.njit(cache=True)
def _tree_edges(slot, lo_idx, lo_dir, hi_idx, hi_dir):
    m = lo_idx.shape[0]
    out = np.zeros(m, dtype=np.bool_)
    for k in range(m):
        a = lo_idx[k]
        b = hi_idx[k]
        if (a >= 0 and slot[a] == lo_dir[k]) or (b >= 0 and slot[b] == hi_dir[k]):
            out[k] = True
    return out


@numba.njit(cache=True)
def _strip_leaves(n_faces, edge_faces, dual_mask, ptr, csr):
    """Dual edges left after repeatedly deleting degree-one faces."""
    deg = np.zeros(n_faces, dtype=np.int64)
    alive = dual_mask.copy()
    for k in range(edge_faces.shape[0]):
        if alive[k]:
            deg[edge_faces[k, 0]] += 1
            deg[edge_faces[k, 1]] += 1
    stack = np.empty(n_faces, dtype=np.int64)
    top = 0
    for f in range(n_faces):
        if deg[f] == 1:
            stack[top] = f
            top += 1
    while top > 0:
        top -= 1
        f = stack[top]
        if deg[f] != 1:
            continue
        for q in range(ptr[f], ptr[f + 1]):
            k = csr[q]
            if alive[k]:
                alive[k] = False
                deg[f] -= 1
                g = edge_faces[k, 0] if edge_faces[k, 1] == f else edge_faces[k, 1]
                deg[g] -= 1
                if deg[g] == 1:
                    stack[top] = g
                    top += 1
                break
    return alive


def dual_complement(tree: SpanningTree, domain: LatticeDomain) -> frozenset:
    """Dual edges crossing the shared primal edges that are not in the tree.

    Each dual edge is reported as the pair of faces it joins.
    """
    ds = dual_structure(domain)
    in_tree = _tree_edges(tree.slot, ds.lo_idx, ds.lo_dir, ds.hi_idx, ds.hi_dir)
    return frozenset(
        (ds.faces[a], ds.faces[b]) for k, (a, b) in enumerate(ds.edge_faces) if not in_tree[k]
    )


@dataclass(frozen=True, eq=False)
class AnnulusLoop:
    """Dual cycle, ordered counterclockwise, as a list of faces."""

    cycle: tuple
    crossed_edges: frozenset
    mesh: float = 1.0

    @property
    def key(self) -> frozenset:
        return self.crossed_edges

    @cached_property
    def points(self) -> np.ndarray:
        arr = np.asarray(self.cycle, dtype=float) + 0.5
        return (arr[:, 0] + 1j * arr[:, 1]) * self.mesh

    def winding_number(self, around: complex) -> int:
        z = self.points - around
        ang = np.angle(np.roll(z, -1) / z)
        return int(round(ang.sum() / (2 * math.pi)))

    def __len__(self):
        return len(self.cycle)


def hole_point(domain: LatticeDomain) -> complex:
    """A point inside the hole: centroid of the inner boundary component."""
    inner = domain.inner_boundary
    if not inner:
        raise NotAnnular("domain has no inner boundary")
    arr = np.asarray(sorted(inner), dtype=float)
    return complex(arr[:, 0].mean(), arr[:, 1].mean()) * domain.mesh


def _require_annulus(domain: LatticeDomain) -> None:
    if euler_characteristic(domain) != 0 or len(domain.boundary_components) != 2 or domain.removed:
        raise NotAnnular("loop extraction needs an uncut annular domain")
    if domain.neumann or domain.free_edges:
        raise NotAnnular("loop extraction needs a fully wired boundary")


def loop_edge_mask(domain: LatticeDomain, slot: np.ndarray) -> np.ndarray:
    """Boolean mask over shared edges: the edges crossed by the dual cycle."""
    ds = dual_structure(domain)
    in_tree = _tree_edges(slot, ds.lo_idx, ds.lo_dir, ds.hi_idx, ds.hi_dir)
    return _strip_leaves(len(ds.faces), ds.edge_faces, ~in_tree, ds.csr_ptr, ds.csr_edges)


def loop_from_mask(domain: LatticeDomain, mask: np.ndarray) -> AnnulusLoop:
    ds = dual_structure(domain)
    ks = np.nonzero(mask)[0]
    adj: dict = {}
    for k in ks:
        a, b = ds.edge_faces[k]
        adj.setdefault(int(a), []).append(int(b))
        adj.setdefault(int(b), []).append(int(a))
    if not adj:
        raise MultipleCycles("dual complement has no cycle")
    if any(len(v) != 2 for v in adj.values()):
        raise MultipleCycles("dual cycle is not simple")
    start = min(adj)
    order = [start]
    prev, cur = start, adj[start][0]
    while cur != start:
        order.append(cur)
        nxt = adj[cur][0] if adj[cur][0] != prev else adj[cur][1]
        prev, cur = cur, nxt
    if len(order) != len(adj):
        raise MultipleCycles("dual complement has more than one cycle")
    cycle = [ds.faces[k] for k in order]
    loop = AnnulusLoop(tuple(cycle), frozenset(ds.edges[k] for k in ks), domain.mesh)
    w = loop.winding_number(hole_point(domain))
    if w == -1:
        loop = AnnulusLoop(tuple([cycle[0]] + cycle[:0:-1]), loop.crossed_edges, domain.mesh)
        w = 1
    if w != 1:
        raise MultipleCycles(f"dual cycle has winding number {w}")
    return loop


def extract_loop(tree: SpanningTree, domain: LatticeDomain) -> AnnulusLoop:
    _require_annulus(domain)
    return loop_from_mask(domain, loop_edge_mask(domain, tree.slot))


@numba.njit(cache=True)
def _loop_masks(table, seeds, lo_idx, lo_dir, hi_idx, hi_dir, n_faces, edge_faces, ptr, csr):
    out = np.empty((seeds.shape[0], lo_idx.shape[0]), dtype=np.bool_)
    for r in range(seeds.shape[0]):
        slot = _wilson_kernel(table, seeds[r])
        in_tree = _tree_edges(slot, lo_idx, lo_dir, hi_idx, hi_dir)
        out[r] = _strip_leaves(n_faces, edge_faces, ~in_tree, ptr, csr)
    return out


def sample_loop_masks(domain: LatticeDomain, seeds: Sequence[int]) -> np.ndarray:
    """Loop edge masks of independent wired trees, one row per seed."""
    _require_annulus(domain)
    g = domain_graph(domain)
    _check_wired(g)
    ds = dual_structure(domain)
    return _loop_masks(g.table, np.asarray(seeds, dtype=np.uint32), ds.lo_idx, ds.lo_dir,
                       ds.hi_idx, ds.hi_dir, len(ds.faces), ds.edge_faces, ds.csr_ptr, ds.csr_edges)


# -- exploration ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CornerTable:
    """Corner points ``(vertex, face)``: point ``4*f + k`` sits at corner ``k`` of face ``f``.

    ``along[p]`` is the next corner of the same face, ``across[p]`` the corner at
    the same vertex in the face beyond the outgoing edge (``-1`` outside), and
    ``edge[p]`` the index of the outgoing edge in ``edges``.
    """

    faces: tuple
    edges: tuple
    edge_index: dict
    along: np.ndarray
    across: np.ndarray
    edge: np.ndarray
    wired: np.ndarray
    lo_idx: np.ndarray
    lo_dir: np.ndarray
    hi_idx: np.ndarray
    hi_dir: np.ndarray

    def vertex(self, p: int) -> Vertex:
        return face_corners(self.faces[p // 4])[p % 4]

    def face(self, p: int):
        return self.faces[p // 4]

    def position(self, p: int) -> tuple[float, float]:
        """Lattice-unit position: a quarter of the way from the vertex to the face centre."""
        (i, j), (fi, fj) = self.vertex(p), self.faces[p // 4]
        return ((i + fi + 0.5) / 2, (j + fj + 0.5) / 2)


def corner_table(domain: LatticeDomain) -> CornerTable:
    cached = domain.__dict__.get("_corners")
    if cached is not None:
        return cached
    faces = tuple(sorted(domain.faces))
    findex = {f: k for k, f in enumerate(faces)}
    edges = tuple(sorted(domain.edges))
    eindex = {e: k for k, e in enumerate(edges)}
    n = 4 * len(faces)
    along = np.empty(n, dtype=np.int64)
    across = np.full(n, -1, dtype=np.int64)
    edge = np.empty(n, dtype=np.int64)
    for fk, f in enumerate(faces):
        cs = face_corners(f)
        for k in range(4):
            p = 4 * fk + k
            v, w = cs[k], cs[(k + 1) % 4]
            along[p] = 4 * fk + (k + 1) % 4
            e = edge_key(v, w)
            edge[p] = eindex[e]
            a, b = faces_of_edge(e)
            g = b if a == f else a
            if g in findex:
                across[p] = 4 * findex[g] + face_corners(g).index(v)
    index = domain.interior_index
    m = len(edges)
    wired = np.zeros(m, dtype=np.bool_)
    lo_idx = np.full(m, -1, dtype=np.int64)
    hi_idx = np.full(m, -1, dtype=np.int64)
    lo_dir = np.empty(m, dtype=np.int64)
    hi_dir = np.empty(m, dtype=np.int64)
    for k, (u, w) in enumerate(edges):
        wired[k] = (u, w) in domain.wired_edges
        horizontal = u[1] == w[1]
        lo_idx[k] = index.get(u, -1)
        hi_idx[k] = index.get(w, -1)
        lo_dir[k] = 0 if horizontal else 1
        hi_dir[k] = 2 if horizontal else 3
    out = CornerTable(faces, edges, eindex, along, across, edge, wired, lo_idx, lo_dir, hi_idx, hi_dir)
    domain.__dict__["_corners"] = out
    return out


@numba.njit(cache=True)
def _explore(start, along, across, edge, blocked, max_steps):
    path = np.empty(max_steps + 1, dtype=np.int64)
    path[0] = start
    p = start
    n = 1
    while n <= max_steps:
        if blocked[edge[p]]:
            q = along[p]
        else:
            q = across[p]
        if q < 0 or q == start:
            break
        path[n] = q
        n += 1
        p = q
    return path[:n]


@dataclass(frozen=True, eq=False)
class ExplorationPath:
    """Sequence of corner points; positions live on the quarter-shifted half lattice."""

    points: np.ndarray
    corners: CornerTable
    mesh: float
    closed: bool

    def __len__(self):
        return len(self.points)

    @property
    def start(self) -> int:
        return int(self.points[0])

    @cached_property
    def positions(self) -> np.ndarray:
        """Complex positions ``(vertex + face centre)/2`` in physical units."""
        f = np.asarray(self.corners.faces, dtype=float)[self.points // 4]
        k = self.points % 4
        di = np.array([0, 1, 1, 0])[k]
        dj = np.array([0, 0, 1, 1])[k]
        x = (2 * f[:, 0] + di + 0.5) / 2
        y = (2 * f[:, 1] + dj + 0.5) / 2
        return (x + 1j * y) * self.mesh

    def step_kinds(self) -> np.ndarray:
        """True where the step from point k to k+1 runs along an edge (edge on the right)."""
        return self.corners.along[self.points[:-1]] == self.points[1:]

    def hull(self, k: int | None = None) -> Hull:
        """Vertices, crossed edges and traversed edges of the first ``k`` points."""
        k = len(self.points) if k is None else k
        pts = self.points[:k]
        ct = self.corners
        verts = {ct.vertex(int(p)) for p in pts}
        free, wired = set(), set()
        for a, b in zip(pts[:-1], pts[1:]):
            e = ct.edges[ct.edge[a]]
            (wired if ct.along[a] == b else free).add(e)
        return Hull(frozenset(verts), frozenset(free - wired), frozenset(wired))


def start_corner(domain: LatticeDomain, start: Vertex | None = None) -> int:
    """Corner point at ``start`` whose incoming edge is a boundary edge.

    With a mixed boundary, a corner entered through a non-wired boundary edge is
    preferred, so the path runs along the wired arc with the free arc behind it.
    """
    ct = corner_table(domain)
    start = domain.marked_boundary if start is None else start
    if start is None:
        raise ValueError("no start vertex")
    boundary = domain.boundary_edges
    best = None
    for fk, f in enumerate(ct.faces):
        cs = face_corners(f)
        if start not in cs:
            continue
        k = cs.index(start)
        incoming = edge_key(cs[(k - 1) % 4], start)
        if incoming not in boundary:
            continue
        rank = 0 if incoming not in domain.wired_edges else 1
        cand = (rank, 4 * fk + k)
        if best is None or cand < best:
            best = cand
    if best is None:
        raise ValueError(f"{start} is not on the boundary of the face set")
    return best[1]


def exploration_path(
    tree: SpanningTree,
    domain: LatticeDomain,
    start: Vertex | int | None = None,
    max_steps: int | None = None,
) -> ExplorationPath:
    """Contour of the tree seen from ``start``, with tree edges on the right.

    Along each step the path either follows an edge (tree or wired) keeping it on
    the right, or crosses a non-tree edge into the next face.  It stops when it
    leaves the face set through a non-wired boundary edge or returns to its start.
    """
    ct = corner_table(domain)
    p0 = start if isinstance(start, (int, np.integer)) else start_corner(domain, start)
    in_tree = _tree_edges(tree.slot, ct.lo_idx, ct.lo_dir, ct.hi_idx, ct.hi_dir)
    blocked = in_tree | ct.wired
    limit = 4 * len(ct.faces) if max_steps is None else max_steps
    pts = _explore(int(p0), ct.along, ct.across, ct.edge, blocked, limit)
    last = int(pts[-1])
    nxt = ct.along[last] if blocked[ct.edge[last]] else ct.across[last]
    return ExplorationPath(pts, ct, domain.mesh, bool(nxt == p0))


def hitting_time(path: ExplorationPath, cut: LatticeCut | Sequence[complex], epsilon: float) -> float:
    """First index at which the path is within ``epsilon`` of the cut; ``inf`` if never."""
    poly = cut.polyline if isinstance(cut, LatticeCut) else tuple(cut)
    if isinstance(cut, LatticeCut) and not poly:
        poly = tuple(complex(*v) * path.mesh for v in cut.vertices)
    d = polyline_distance(path.positions, poly)
    hits = np.nonzero(d < epsilon)[0]
    return int(hits[0]) if len(hits) else math.inf


# -- disconnection ----------------------------------------------------------


class _DSU:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, x):
        p = self.p
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b):
        a, b = self.find(a), self.find(b)
        if a != b:
            self.p[a] = b


def _corner_neighbours(ct: CornerTable, p: int) -> list[int]:
    """Quarter-lattice neighbours of a corner point (geometric adjacency)."""
    f, k = divmod(p, 4)
    out = [4 * f + (k + 1) % 4, 4 * f + (k - 1) % 4]
    if ct.across[p] >= 0:
        out.append(int(ct.across[p]))
    back = 4 * f + (k - 1) % 4  # the edge entering p from the previous corner
    q = ct.across[back]
    if q >= 0:
        # same vertex as p, in the face beyond the incoming edge (it precedes q there)
        g, kg = divmod(int(q), 4)
        out.append(4 * g + (kg - 1) % 4)
    return out


def _disconnection_setup(path: ExplorationPath, domain: LatticeDomain):
    if len(domain.boundary_components) < 2:
        raise NotAnnular("disconnection time needs an annular domain")
    ct = path.corners
    iv = min(domain.boundary_components[1])
    inner = [p for p in range(len(ct.along)) if ct.vertex(p) == iv]
    return ct, int(path.points[-1]), inner


def disconnection_time(path: ExplorationPath, domain: LatticeDomain) -> float:
    """First index at which the traced path cuts the inner boundary off from the start.

    The complement of the trace after ``k`` steps is the set of corner points not
    yet visited, with quarter-lattice adjacency.  The start ``a`` is represented by
    the corner just before it on a closed exploration (the path's last point),
    which is kept in the complement throughout.  Reverse union-find adds the
    visited points back from the end.  Returns ``inf`` if the path never
    disconnects; a closed path that has not disconnected earlier does so with
    its closing step, reported as ``len(path)``.
    """
    ct, target, inner = _disconnection_setup(path, domain)
    n = len(ct.along)
    pts = [int(p) for p in path.points]
    visited = np.zeros(n, dtype=bool)
    visited[pts] = True
    visited[target] = False
    dsu = _DSU(n)
    for p in range(n):
        if not visited[p]:
            for q in _corner_neighbours(ct, p):
                if not visited[q]:
                    dsu.union(p, q)

    def linked():
        t = dsu.find(target)
        return any(dsu.find(p) == t for p in inner if not visited[p])

    if linked():
        return len(pts) if path.closed else math.inf
    for k in range(len(pts) - 2, -1, -1):
        p = pts[k + 1]
        if p == target:
            continue
        visited[p] = False
        for q in _corner_neighbours(ct, p):
            if not visited[q]:
                dsu.union(p, q)
        if linked():
            return k + 1
    return 0


def disconnection_time_bruteforce(path: ExplorationPath, domain: LatticeDomain) -> float:
    """Per-step breadth-first check; slow oracle for :func:`disconnection_time`."""
    ct, target, inner = _disconnection_setup(path, domain)
    pts = [int(p) for p in path.points]
    visited: set = set()
    goal = set(inner)
    for k, p in enumerate(pts):
        if p != target:
            visited.add(p)
        seen = {target}
        queue = deque([target])
        while queue:
            x = queue.popleft()
            for y in _corner_neighbours(ct, x):
                if y not in visited and y not in seen:
                    seen.add(y)
                    queue.append(y)
        if not (seen & (goal - visited)):
            return k
    return len(pts) if path.closed else math.inf
