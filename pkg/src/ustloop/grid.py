"""Lattice approximations of decorated annuli.

Vertices are integer pairs ``(i, j)`` standing for the point ``(i*mesh, j*mesh)``.
A face ``(i, j)`` is the square with lower-left corner ``(i, j)``.  Boundary
vertices are the corners of domain faces that are not surrounded by four domain
faces, plus any vertices removed later by :func:`remove_set`.

Boundary links are classified edge by edge: a link from an interior vertex to a
boundary vertex is Dirichlet (wired) unless the boundary vertex is Neumann or the
edge itself is listed in ``free_edges``, in which case it is reflecting (free).
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    CutNotSeparating,
    DegenerateApproximation,
    DisconnectedRemainder,
    MarkedPointRemoved,
)

Vertex = tuple[int, int]
Face = tuple[int, int]
Edge = tuple[Vertex, Vertex]

# east, north, west, south
DIRECTIONS: tuple[Vertex, ...] = ((1, 0), (0, 1), (-1, 0), (0, -1))

LINK_DIRICHLET = -1
LINK_FREE = -2


def edge_key(u: Vertex, w: Vertex) -> Edge:
    return (u, w) if u < w else (w, u)


def face_corners(f: Face) -> tuple[Vertex, Vertex, Vertex, Vertex]:
    """Corners of a face in counterclockwise order starting at the lower-left."""
    i, j = f
    return ((i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1))


def faces_of_edge(e: Edge) -> tuple[Face, Face]:
    (i, j), (k, l) = e
    if j == l:  # horizontal
        return ((min(i, k), j), (min(i, k), j - 1))
    return ((i, min(j, l)), (i - 1, min(j, l)))


def faces_of_vertex(v: Vertex) -> tuple[Face, Face, Face, Face]:
    i, j = v
    return ((i, j), (i - 1, j), (i - 1, j - 1), (i, j - 1))


@dataclass(frozen=True)
class AnnulusSpec:
    center: complex
    inner_radius: float
    outer_radius: float

    def __post_init__(self):
        if not (self.outer_radius > self.inner_radius > 0):
            raise ValueError("need outer_radius > inner_radius > 0")

    @property
    def modulus(self) -> float:
        return self.outer_radius / self.inner_radius

    def contains(self, z) -> np.ndarray:
        r = np.abs(np.asarray(z) - self.center)
        return (r > self.inner_radius) & (r < self.outer_radius)


@dataclass(frozen=True)
class LatticeCut:
    """A lattice curve approximating a continuous polyline.

    ``closed`` cuts approximate closed curves (circles, loops) and are only used
    as vertex sets; open cuts are ordered paths between two boundary components.
    """

    vertices: tuple[Vertex, ...]
    side: str = "left"
    polyline: tuple[complex, ...] = ()
    closed: bool = False

    @cached_property
    def vertex_set(self) -> frozenset:
        return frozenset(self.vertices)

    def __len__(self):
        return len(self.vertices)


@dataclass(frozen=True)
class Hull:
    """A removable set with per-edge boundary conditions.

    ``vertices`` become boundary vertices, ``free_edges`` become reflecting links
    and ``wired_edges`` are contour edges treated as part of the wired boundary by
    the exploration process.
    """

    vertices: frozenset = frozenset()
    free_edges: frozenset = frozenset()
    wired_edges: frozenset = frozenset()
    neumann_arc: frozenset = frozenset()

    @classmethod
    def of(cls, vertices: Iterable[Vertex]) -> "Hull":
        return cls(vertices=frozenset(vertices))

    def __bool__(self):
        return bool(self.vertices) or bool(self.free_edges)


@dataclass(frozen=True, eq=False)
class LatticeDomain:
    mesh: float
    faces: frozenset
    dirichlet: frozenset
    neumann: frozenset
    marked_interior: Vertex | None
    marked_boundary: Vertex | None = None
    removed: frozenset = frozenset()
    free_edges: frozenset = frozenset()
    wired_edges: frozenset = frozenset()

    # -- derived sets -------------------------------------------------------

    @cached_property
    def _face_count(self) -> dict:
        count: dict = {}
        for f in self.faces:
            for v in face_corners(f):
                count[v] = count.get(v, 0) + 1
        return count

    @cached_property
    def vertices(self) -> frozenset:
        return frozenset(self._face_count)

    @cached_property
    def outer_boundary_vertices(self) -> frozenset:
        """Vertices adjacent to the complement of the face set (before removals)."""
        return frozenset(v for v, c in self._face_count.items() if c < 4)

    @cached_property
    def boundary(self) -> frozenset:
        return self.outer_boundary_vertices | (self.removed & self.vertices)

    @cached_property
    def interior(self) -> tuple[Vertex, ...]:
        """Interior vertices in lexicographic order (the canonical index order)."""
        return tuple(sorted(self.vertices - self.boundary))

    @cached_property
    def interior_index(self) -> dict:
        return {v: k for k, v in enumerate(self.interior)}

    @cached_property
    def edges(self) -> frozenset:
        out = set()
        for f in self.faces:
            c = face_corners(f)
            for k in range(4):
                out.add(edge_key(c[k], c[(k + 1) % 4]))
        return frozenset(out)

    @cached_property
    def shared_edges(self) -> frozenset:
        faces = self.faces
        return frozenset(e for e in self.edges if all(f in faces for f in faces_of_edge(e)))

    @cached_property
    def boundary_edges(self) -> frozenset:
        """Edges on the topological boundary of the face set (one adjacent face)."""
        return self.edges - self.shared_edges

    @cached_property
    def boundary_components(self) -> tuple[frozenset, ...]:
        """Components of the original boundary joined by boundary edges; outer first."""
        adj: dict = {v: [] for v in self.outer_boundary_vertices}
        for u, w in self.boundary_edges:
            adj[u].append(w)
            adj[w].append(u)
        seen: set = set()
        comps = []
        for v in sorted(adj):
            if v in seen:
                continue
            comp = {v}
            queue = deque([v])
            seen.add(v)
            while queue:
                x = queue.popleft()
                for y in adj[x]:
                    if y not in seen:
                        seen.add(y)
                        comp.add(y)
                        queue.append(y)
            comps.append(frozenset(comp))
        # the lexicographically smallest vertex is on the outer boundary
        return tuple(comps)

    @property
    def outer_boundary(self) -> frozenset:
        return self.boundary_components[0]

    @property
    def inner_boundary(self) -> frozenset:
        comps = self.boundary_components
        return frozenset().union(*comps[1:]) if len(comps) > 1 else frozenset()

    # -- links --------------------------------------------------------------

    def is_free(self, u: Vertex, w: Vertex) -> bool:
        return u in self.neumann or w in self.neumann or edge_key(u, w) in self.free_edges

    @cached_property
    def link_table(self) -> tuple[np.ndarray, list]:
        """Per interior vertex and direction: interior index, LINK_DIRICHLET or LINK_FREE.

        Also returns, for every Dirichlet link, the boundary vertex reached.
        """
        index = self.interior_index
        n = len(self.interior)
        table = np.empty((n, 4), dtype=np.int64)
        targets: list = [[None] * 4 for _ in range(n)]
        free_edges, neumann = self.free_edges, self.neumann
        for k, (i, j) in enumerate(self.interior):
            for d, (di, dj) in enumerate(DIRECTIONS):
                u = (i + di, j + dj)
                if u in neumann or (free_edges and edge_key((i, j), u) in free_edges):
                    table[k, d] = LINK_FREE
                elif u in index:
                    table[k, d] = index[u]
                else:
                    table[k, d] = LINK_DIRICHLET
                    targets[k][d] = u
        return table, targets

    def point(self, v: Vertex) -> complex:
        return complex(v[0] * self.mesh, v[1] * self.mesh)

    def points(self, vs: Iterable[Vertex]) -> np.ndarray:
        arr = np.array(list(vs), dtype=float).reshape(-1, 2) * self.mesh
        return arr[:, 0] + 1j * arr[:, 1]

    @property
    def is_annular(self) -> bool:
        return euler_characteristic(self) == 0 and len(self.boundary_components) == 2

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "mesh": self.mesh,
            "faces": sorted(list(f) for f in self.faces),
            "dirichlet": sorted(list(v) for v in self.dirichlet),
            "neumann": sorted(list(v) for v in self.neumann),
            "marked_interior": list(self.marked_interior) if self.marked_interior else None,
            "marked_boundary": list(self.marked_boundary) if self.marked_boundary else None,
            "removed": sorted(list(v) for v in self.removed),
            "free_edges": sorted([list(u), list(w)] for u, w in self.free_edges),
            "wired_edges": sorted([list(u), list(w)] for u, w in self.wired_edges),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "LatticeDomain":
        vs = lambda key: frozenset(tuple(v) for v in d.get(key) or [])
        es = lambda key: frozenset(edge_key(tuple(u), tuple(w)) for u, w in d.get(key) or [])
        mi, mb = d.get("marked_interior"), d.get("marked_boundary")
        return cls(
            mesh=float(d["mesh"]),
            faces=vs("faces"),
            dirichlet=vs("dirichlet"),
            neumann=vs("neumann"),
            marked_interior=tuple(mi) if mi else None,
            marked_boundary=tuple(mb) if mb else None,
            removed=vs("removed"),
            free_edges=es("free_edges"),
            wired_edges=es("wired_edges"),
        )

    @classmethod
    def from_json(cls, text: str) -> "LatticeDomain":
        return cls.from_dict(json.loads(text))


# -- topology ---------------------------------------------------------------


def euler_characteristic(domain: LatticeDomain) -> int:
    """Euler characteristic of the open region covered by the domain.

    Computed on the dual cell complex: faces are 0-cells, shared open edges are
    1-cells and interior vertices are 2-cells.  Removed vertices (and edges between
    two removed vertices) are cut out of the region; faces with four removed
    corners are dropped entirely.
    """
    removed = domain.removed
    faces = {f for f in domain.faces if not all(c in removed for c in face_corners(f))}
    n_edges = 0
    for e in domain.shared_edges:
        if e[0] in removed and e[1] in removed:
            continue
        if all(f in faces for f in faces_of_edge(e)):
            n_edges += 1
    return len(faces) - n_edges + len(domain.interior)


def region_components(domain: LatticeDomain) -> int:
    """Number of connected components of the (possibly cut) region."""
    removed = domain.removed
    faces = {f for f in domain.faces if not all(c in removed for c in face_corners(f))}
    adj: dict = {f: [] for f in faces}
    for e in domain.shared_edges:
        if e[0] in removed and e[1] in removed:
            continue
        a, b = faces_of_edge(e)
        if a in faces and b in faces:
            adj[a].append(b)
            adj[b].append(a)
    return _count_components(adj)


def _count_components(adj: dict) -> int:
    seen: set = set()
    count = 0
    for s in adj:
        if s in seen:
            continue
        count += 1
        seen.add(s)
        stack = [s]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
    return count


def is_simply_connected(domain: LatticeDomain) -> bool:
    return region_components(domain) == 1 and euler_characteristic(domain) == 1


def interior_components(domain: LatticeDomain) -> list[frozenset]:
    """Connected components of interior vertices through non-free links."""
    table, _ = domain.link_table
    interior = domain.interior
    seen = np.zeros(len(interior), dtype=bool)
    comps = []
    for s in range(len(interior)):
        if seen[s]:
            continue
        seen[s] = True
        stack, comp = [s], [s]
        while stack:
            x = stack.pop()
            for y in table[x]:
                if y >= 0 and not seen[y]:
                    seen[y] = True
                    stack.append(int(y))
                    comp.append(int(y))
        comps.append(frozenset(interior[k] for k in comp))
    return comps


# -- constructors -----------------------------------------------------------


def _snap(target: complex, candidates: Iterable[Vertex], mesh: float) -> Vertex:
    x, y = target.real / mesh, target.imag / mesh
    return min(candidates, key=lambda v: ((v[0] - x) ** 2 + (v[1] - y) ** 2, v))


def from_faces(
    faces: Iterable[Face],
    mesh: float = 1.0,
    marked_interior: complex | Vertex | None = None,
    marked_boundary: complex | Vertex | None = None,
    neumann: Iterable[Vertex] = (),
) -> LatticeDomain:
    """Build a domain from a face set; boundary is Dirichlet except ``neumann``."""
    faces = frozenset(faces)
    if not faces:
        raise DegenerateApproximation("empty face set")
    probe = LatticeDomain(mesh, faces, frozenset(), frozenset(), None)
    boundary = probe.boundary
    neumann = frozenset(neumann) & boundary
    interior = probe.interior
    mi = _resolve(marked_interior, interior, mesh)
    mb = _resolve(marked_boundary, boundary, mesh)
    return LatticeDomain(
        mesh=mesh,
        faces=faces,
        dirichlet=boundary - neumann,
        neumann=neumann,
        marked_interior=mi,
        marked_boundary=mb,
        wired_edges=frozenset(
            e for e in probe.boundary_edges if e[0] not in neumann and e[1] not in neumann
        ),
    )


def _resolve(mark, candidates, mesh):
    if mark is None or not candidates:
        return None
    if isinstance(mark, tuple):
        return mark if mark in candidates else _snap(complex(mark[0], mark[1]) * mesh, candidates, mesh)
    return _snap(complex(mark), candidates, mesh)


def _component(faces: set, start: Face) -> set:
    comp = {start}
    stack = [start]
    while stack:
        i, j = stack.pop()
        for di, dj in DIRECTIONS:
            g = (i + di, j + dj)
            if g in faces and g not in comp:
                comp.add(g)
                stack.append(g)
    return comp


def _faces_inside(inside_fn, xmin, xmax, ymin, ymax, mesh) -> set:
    i0, i1 = math.floor(xmin / mesh) - 1, math.ceil(xmax / mesh) + 1
    j0, j1 = math.floor(ymin / mesh) - 1, math.ceil(ymax / mesh) + 1
    xs = np.arange(i0, i1 + 1) * mesh
    ys = np.arange(j0, j1 + 1) * mesh
    z = xs[:, None] + 1j * ys[None, :]
    ok = inside_fn(z)
    good = ok[:-1, :-1] & ok[1:, :-1] & ok[:-1, 1:] & ok[1:, 1:]
    ii, jj = np.nonzero(good)
    return set(zip((ii + i0).tolist(), (jj + j0).tolist()))


def approximate_annulus(
    spec: AnnulusSpec,
    mesh: float,
    marked_interior: complex,
    marked_boundary: complex | None = None,
) -> LatticeDomain:
    """Largest mesh-``mesh`` lattice annulus inside ``spec`` containing the marked point.

    A face belongs to the candidate set when its four corners lie strictly inside
    the open annulus; the connected component holding the marked point is kept.
    """
    if not spec.contains(marked_interior):
        raise DegenerateApproximation("marked point outside the annulus")
    c, R = spec.center, spec.outer_radius
    candidates = _faces_inside(spec.contains, c.real - R, c.real + R, c.imag - R, c.imag + R, mesh)
    f0 = (math.floor(marked_interior.real / mesh), math.floor(marked_interior.imag / mesh))
    if f0 not in candidates:
        raise DegenerateApproximation("no lattice face around the marked point fits in the annulus")
    faces = _component(candidates, f0)
    domain = from_faces(faces, mesh, None, marked_boundary)
    if euler_characteristic(domain) != 0 or len(domain.boundary_components) != 2:
        raise DegenerateApproximation("approximation is not doubly connected")
    if not domain.interior:
        return domain
    mi = _snap(marked_interior, domain.interior, mesh)
    return _replace(domain, marked_interior=mi)


def approximate_region(
    inside,
    bbox: tuple[float, float, float, float],
    mesh: float,
    marked_interior: complex,
    marked_boundary: complex | None = None,
) -> LatticeDomain:
    """Lattice approximation of ``{z : inside(z)}`` within ``bbox = (xmin, xmax, ymin, ymax)``."""
    candidates = _faces_inside(inside, *bbox, mesh)
    f0 = (math.floor(marked_interior.real / mesh), math.floor(marked_interior.imag / mesh))
    if f0 not in candidates:
        raise DegenerateApproximation("no lattice face around the marked point fits in the region")
    domain = from_faces(_component(candidates, f0), mesh, None, marked_boundary)
    if not domain.interior:
        return domain
    return _replace(domain, marked_interior=_snap(marked_interior, domain.interior, mesh))


def approximate_disk(
    center: complex,
    radius: float,
    mesh: float,
    marked_interior: complex | None = None,
    marked_boundary: complex | None = None,
    neumann_arc: tuple[float, float] | None = None,
) -> LatticeDomain:
    """Lattice disk; boundary vertices with polar angle in ``neumann_arc`` are free."""
    inside = lambda z: np.abs(z - center) < radius
    candidates = _faces_inside(inside, center.real - radius, center.real + radius,
                               center.imag - radius, center.imag + radius, mesh)
    x0 = center if marked_interior is None else marked_interior
    f0 = (math.floor(x0.real / mesh), math.floor(x0.imag / mesh))
    if f0 not in candidates:
        raise DegenerateApproximation("marked face not inside the disk")
    faces = _component(candidates, f0)
    neumann: set = set()
    if neumann_arc is not None:
        probe = LatticeDomain(mesh, frozenset(faces), frozenset(), frozenset(), None)
        lo, hi = neumann_arc
        for v in probe.boundary:
            ang = math.atan2(v[1] * mesh - center.imag, v[0] * mesh - center.real) % (2 * math.pi)
            if lo <= ang <= hi:
                neumann.add(v)
    return from_faces(faces, mesh, x0, marked_boundary, neumann)


def square_annulus(n: int, hole: int, mesh: float = 1.0) -> LatticeDomain:
    """``n x n`` block of faces with a centred ``hole x hole`` block removed.

    Marked interior vertex: midpoint of the bottom band; marked boundary vertex:
    middle of the bottom side.
    """
    if not (0 < hole < n - 1) or (n - hole) % 2:
        raise ValueError("hole must be smaller than n with n - hole even")
    lo, hi = (n - hole) // 2, (n + hole) // 2
    faces = {(i, j) for i in range(n) for j in range(n) if not (lo <= i < hi and lo <= j < hi)}
    mi = (n // 2, lo // 2) if lo >= 2 else None
    domain = from_faces(faces, mesh, mi, (n // 2, 0))
    if mi is None or mi not in domain.interior_index:
        mi = domain.interior[0] if domain.interior else None
        domain = _replace(domain, marked_interior=mi)
    return domain


def rectangle(nx: int, ny: int, mesh: float = 1.0, neumann: Iterable[Vertex] = ()) -> LatticeDomain:
    faces = {(i, j) for i in range(nx) for j in range(ny)}
    mi = (nx // 2, ny // 2) if nx > 1 and ny > 1 else None
    return from_faces(faces, mesh, mi, (nx // 2, 0), neumann)


def _replace(domain: LatticeDomain, **changes) -> LatticeDomain:
    fields = dict(
        mesh=domain.mesh,
        faces=domain.faces,
        dirichlet=domain.dirichlet,
        neumann=domain.neumann,
        marked_interior=domain.marked_interior,
        marked_boundary=domain.marked_boundary,
        removed=domain.removed,
        free_edges=domain.free_edges,
        wired_edges=domain.wired_edges,
    )
    fields.update(changes)
    return LatticeDomain(**fields)


# -- removal ----------------------------------------------------------------


def remove_set(
    domain: LatticeDomain,
    removed: Iterable[Vertex] | Hull | LatticeCut,
    neumann_arc: Iterable[Vertex] = (),
    free_edges: Iterable[Edge] = (),
    wired_edges: Iterable[Edge] | None = None,
    allow_disconnected: bool = False,
) -> LatticeDomain:
    """Domain with ``removed`` turned into boundary.

    Newly created boundary vertices are Dirichlet unless listed in ``neumann_arc``;
    ``free_edges`` adds reflecting links edge by edge.  The original boundary
    classification is preserved.
    """
    if isinstance(removed, Hull):
        hull = removed
        removed = hull.vertices
        neumann_arc = set(neumann_arc) | set(hull.neumann_arc)
        free_edges = set(free_edges) | set(hull.free_edges)
        if wired_edges is None and hull.wired_edges:
            wired_edges = hull.wired_edges
    elif isinstance(removed, LatticeCut):
        removed = removed.vertices
    removed = frozenset(removed)
    if not removed <= domain.vertices:
        raise ValueError("removed set must consist of domain vertices")
    if domain.marked_interior is not None and domain.marked_interior in removed:
        raise MarkedPointRemoved(f"{domain.marked_interior} is in the removed set")
    new = removed - domain.boundary
    neumann_new = new & frozenset(neumann_arc)
    if wired_edges is None:
        wired_edges = [
            edge_key(v, (v[0] + di, v[1] + dj))
            for v in removed
            for di, dj in DIRECTIONS[:2]
            if (v[0] + di, v[1] + dj) in removed
        ]
    wired = frozenset(e for e in (edge_key(*e) for e in wired_edges) if e in domain.edges)
    out = _replace(
        domain,
        dirichlet=domain.dirichlet | (new - neumann_new),
        neumann=domain.neumann | neumann_new,
        removed=domain.removed | removed,
        free_edges=domain.free_edges | frozenset(edge_key(*e) for e in free_edges),
        wired_edges=domain.wired_edges | wired,
    )
    if not allow_disconnected and len(interior_components(out)) > 1:
        raise DisconnectedRemainder("removal disconnects the remaining interior")
    return out


# -- Neumann splitting ------------------------------------------------------


@dataclass(frozen=True)
class WorkingGraph:
    """Graph in which every free link ends at its own Neumann copy.

    ``nodes`` maps a node id to ``(vertex, kind)`` with kind in
    {"interior", "dirichlet", "neumann"}; node ids are ``(vertex, copy)``.
    """

    nodes: dict = field(default_factory=dict)
    edges: tuple = ()


def split_neumann_vertices(domain: LatticeDomain) -> WorkingGraph:
    nodes: dict = {}
    edges: list = []
    index = domain.interior_index
    copies: dict = {}
    for v in sorted(domain.vertices):
        if v in index:
            nodes[(v, 0)] = (v, "interior")
        elif v not in domain.neumann:
            nodes[(v, 0)] = (v, "dirichlet")
    for v in domain.interior:
        for di, dj in DIRECTIONS[:2] + DIRECTIONS[2:]:
            u = (v[0] + di, v[1] + dj)
            if u in index:
                if v < u:
                    edges.append(((v, 0), (u, 0)))
                continue
            if domain.is_free(v, u):
                k = copies.get(u, 0)
                copies[u] = k + 1
                nodes[(u, k + 1)] = (u, "neumann")
                edges.append(((v, 0), (u, k + 1)))
            else:
                edges.append(((v, 0), (u, 0)))
    # Neumann vertices without any interior edge keep a single copy
    for v in domain.neumann:
        if v not in copies and v in domain.vertices:
            nodes[(v, 1)] = (v, "neumann")
    return WorkingGraph(nodes=nodes, edges=tuple(edges))


# -- cuts -------------------------------------------------------------------


def _seg_dist(p: np.ndarray, a: complex, b: complex) -> np.ndarray:
    d = b - a
    L = abs(d) ** 2
    if L == 0:
        return np.abs(p - a)
    t = np.clip(((p - a) * np.conj(d)).real / L, 0.0, 1.0)
    return np.abs(p - (a + t * d))


def polyline_distance(points, polyline: Sequence[complex]) -> np.ndarray:
    """Euclidean distance from each point to a polyline."""
    p = np.asarray(points, dtype=complex)
    poly = list(polyline)
    if len(poly) == 1:
        return np.abs(p - poly[0])
    out = np.full(p.shape, np.inf)
    for a, b in zip(poly[:-1], poly[1:]):
        out = np.minimum(out, _seg_dist(p, a, b))
    return out


def _segments_intersect(p1, p2, q1, q2, eps=1e-12) -> bool:
    def cross(o, a, b):
        return (a.real - o.real) * (b.imag - o.imag) - (a.imag - o.imag) * (b.real - o.real)

    d1, d2 = cross(q1, q2, p1), cross(q1, q2, p2)
    d3, d4 = cross(p1, p2, q1), cross(p1, p2, q2)
    if ((d1 > eps and d2 < -eps) or (d1 < -eps and d2 > eps)) and (
        (d3 > eps and d4 < -eps) or (d3 < -eps and d4 > eps)
    ):
        return True

    def on_seg(a, b, c):
        return (min(a.real, b.real) - eps <= c.real <= max(a.real, b.real) + eps
                and min(a.imag, b.imag) - eps <= c.imag <= max(a.imag, b.imag) + eps)

    return (
        (abs(d1) <= eps and on_seg(q1, q2, p1))
        or (abs(d2) <= eps and on_seg(q1, q2, p2))
        or (abs(d3) <= eps and on_seg(p1, p2, q1))
        or (abs(d4) <= eps and on_seg(p1, p2, q2))
    )


def _point_in_polygon(z: np.ndarray, poly: np.ndarray) -> np.ndarray:
    x, y = z.real, z.imag
    inside = np.zeros(z.shape, dtype=bool)
    xs, ys = poly.real, poly.imag
    n = len(poly)
    for k in range(n - 1):
        x1, y1, x2, y2 = xs[k], ys[k], xs[k + 1], ys[k + 1]
        cond = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= cond & (x < xint)
    return inside


def approximate_cut(
    domain: LatticeDomain,
    polyline: Sequence[complex],
    side: str = "left",
) -> LatticeCut:
    """Lattice curve on one side of ``polyline``, as close as possible without touching it.

    ``side`` refers to the direction of travel along the polyline.  A closed
    polyline (first point equal to the last) yields a closed cut; ``left`` is then
    the interior of a counterclockwise polygon.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    mesh = domain.mesh
    poly = np.asarray([complex(p) for p in polyline]) / mesh
    closed = len(poly) > 3 and abs(poly[0] - poly[-1]) < 1e-12
    sign = 1 if side == "left" else -1
    if closed:
        area = 0.5 * np.sum(poly.real[:-1] * poly.imag[1:] - poly.real[1:] * poly.imag[:-1])
        want_inside = (area > 0) == (side == "left")

        def on_side(vs):
            z = np.array([complex(*v) for v in vs])
            return _point_in_polygon(z, poly) == want_inside
    else:

        def on_side(vs):
            z = np.array([complex(*v) for v in vs])
            best = np.full(len(z), np.inf)
            out = np.zeros(len(z), dtype=bool)
            for a, b in zip(poly[:-1], poly[1:]):
                d = _seg_dist(z, a, b)
                cr = ((b - a).real * (z - a).imag - (b - a).imag * (z - a).real) * sign
                closer = d < best
                out = np.where(closer, cr > 0, out)
                best = np.minimum(best, d)
            return out

    verts = domain.vertices
    near: set = set()
    for a, b in zip(poly[:-1], poly[1:]):
        i0, i1 = math.floor(min(a.real, b.real)) - 1, math.ceil(max(a.real, b.real)) + 1
        j0, j1 = math.floor(min(a.imag, b.imag)) - 1, math.ceil(max(a.imag, b.imag)) + 1
        span = max(i1 - i0, j1 - j0)
        if span > 8:
            # long segment: walk along it instead of scanning its bounding box
            steps = int(math.ceil(abs(b - a) * 2)) + 1
            for t in np.linspace(0.0, 1.0, steps + 1):
                p = a + t * (b - a)
                for i in range(math.floor(p.real) - 1, math.floor(p.real) + 3):
                    for j in range(math.floor(p.imag) - 1, math.floor(p.imag) + 3):
                        near.add((i, j))
        else:
            for i in range(i0, i1 + 1):
                for j in range(j0, j1 + 1):
                    near.add((i, j))
    near &= verts
    if not near:
        raise CutNotSeparating("polyline does not meet the domain")
    near_list = sorted(near)
    dist = polyline_distance(np.array([complex(*v) for v in near_list]), poly)
    on_curve = {v for v, d in zip(near_list, dist) if d < 1e-9}
    side_ok = dict(zip(near_list, on_side(near_list)))
    segs = list(zip(poly[:-1], poly[1:]))
    # hash segments by the unit cells their bounding boxes touch
    seg_cells: dict = {}
    for k, (a, b) in enumerate(segs):
        for i in range(math.floor(min(a.real, b.real)) - 1, math.floor(max(a.real, b.real)) + 1):
            for j in range(math.floor(min(a.imag, b.imag)) - 1, math.floor(max(a.imag, b.imag)) + 1):
                seg_cells.setdefault((i, j), []).append(k)
    chosen: set = set()
    for v in near_list:
        if v in on_curve or not side_ok[v]:
            continue
        zv = complex(*v)
        for di, dj in DIRECTIONS:
            u = (v[0] + di, v[1] + dj)
            if u not in verts:
                continue
            zu = complex(*u)
            cell = (min(v[0], u[0]), min(v[1], u[1]))
            if u in on_curve or (u in side_ok and not side_ok[u]) or any(
                _segments_intersect(zv, zu, *segs[k]) for k in seg_cells.get(cell, ())
            ):
                chosen.add(v)
                break
    # diagonal steps get a connector vertex on the chosen side
    extra = set()
    for v in chosen:
        for di, dj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            w = (v[0] + di, v[1] + dj)
            if w not in chosen:
                continue
            c1, c2 = (v[0] + di, v[1]), (v[0], v[1] + dj)
            if c1 in chosen or c2 in chosen or c1 in extra or c2 in extra:
                continue
            opts = [c for c in (c1, c2) if c in verts and c not in on_curve]
            opts = [c for c, ok in zip(opts, on_side(opts)) if ok] if opts else []
            if opts:
                dd = polyline_distance(np.array([complex(*c) for c in opts]), poly)
                extra.add(opts[int(np.argmax(dd))])
    chosen |= extra
    if closed:
        centre = poly[:-1].mean()
        ordered = sorted(chosen, key=lambda v: (math.atan2(v[1] - centre.imag, v[0] - centre.real), v))
        return LatticeCut(tuple(ordered), side, tuple(complex(p) for p in polyline), True)

    comps = domain.boundary_components
    if len(comps) < 2:
        raise CutNotSeparating("domain has a single boundary component")

    def comp_of(p: complex) -> int:
        v = _snap(p * mesh, domain.outer_boundary_vertices, mesh)
        return next(k for k, c in enumerate(comps) if v in c)

    c_start, c_end = comp_of(poly[0]), comp_of(poly[-1])
    if c_start == c_end:
        raise CutNotSeparating("polyline does not join two boundary components")
    start, goal = comps[c_start], comps[c_end]
    sources = sorted(v for v in chosen if v in start)
    prev: dict = {v: None for v in sources}
    queue = deque(sources)
    hit = None
    while queue:
        x = queue.popleft()
        if x in goal:
            hit = x
            break
        for di, dj in DIRECTIONS:
            y = (x[0] + di, x[1] + dj)
            if y in chosen and y not in prev:
                prev[y] = x
                queue.append(y)
    if hit is None:
        raise CutNotSeparating("no lattice path along the polyline joins the boundary components")
    path = [hit]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    path.reverse()
    cut = LatticeCut(tuple(path), side, tuple(complex(p) for p in polyline), False)
    try:
        cut_domain = remove_set(_replace(domain, marked_interior=None), cut.vertices,
                                allow_disconnected=True)
    except MarkedPointRemoved:  # pragma: no cover - marked point cleared above
        raise
    if not is_simply_connected(cut_domain):
        raise CutNotSeparating("removing the lattice cut does not leave a simply-connected domain")
    return cut


def radial_polyline(center: complex, r0: float, r1: float, angle: float) -> list[complex]:
    u = complex(math.cos(angle), math.sin(angle))
    return [center + r0 * u, center + r1 * u]


def circle_polyline(center: complex, radius: float, n: int = 2048) -> list[complex]:
    """Counterclockwise closed polygon approximating a circle."""
    t = np.linspace(0.0, 2 * np.pi, n + 1)
    pts = center + radius * np.exp(1j * t)
    pts[-1] = pts[0]
    return list(pts)
