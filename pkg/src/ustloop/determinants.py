"""Determinantal quantities: Laplacian log-determinants, tree counts and Fredholm determinants.

Throughout, ``A minus X`` means the domain with the vertices of ``X`` made
Dirichlet, and "free" edges are deleted from the graph (reflecting links).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import (
    CutsDoNotSeparate,
    CutsIntersect,
    DimensionMismatch,
    LoopNotSeparated,
    LoopTouchesH,
    NotAnnular,
    TooLargeToEnumerate,
)
from .grid import (
    Hull,
    LatticeCut,
    LatticeDomain,
    Vertex,
    _replace,
    edge_key,
    euler_characteristic,
    faces_of_edge,
    interior_components,
    remove_set,
)
from .harmonic import (
    KernelOperator,
    LaplacianSystem,
    cut_domain,
    effective_cut,
    extension_operator,
    laplacian_of,
)
from .spanning import AnnulusLoop, GraphTable, dual_structure, domain_graph, hole_point


@dataclass(frozen=True)
class LogDet:
    value: float

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class FredholmValue:
    value: float
    truncation_order: int | str = "exact-dense"
    tail_bound: float | None = None


def log_det(system: LaplacianSystem | np.ndarray) -> LogDet:
    if isinstance(system, LaplacianSystem):
        return LogDet(system.log_det)
    sign, val = np.linalg.slogdet(np.asarray(system, dtype=float))
    if sign <= 0:
        raise ValueError("matrix is not positive definite")
    return LogDet(float(val))


def domain_log_det(domain: LatticeDomain) -> float:
    return laplacian_of(domain).log_det


# -- tree counts ------------------------------------------------------------


def _integer_laplacian(g: GraphTable) -> list[list[int]]:
    n = g.size
    mat = [[0] * n for _ in range(n)]
    for v in range(n):
        for t in g.table[v]:
            if t >= 0:
                mat[v][v] += 1
                mat[v][int(t)] -= 1
            elif t == -1:
                mat[v][v] += 1
    return mat


def bareiss_det(mat: Sequence[Sequence[int]]) -> int:
    """Exact determinant of an integer matrix by fraction-free elimination."""
    a = [list(map(int, row)) for row in mat]
    n = len(a)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def count_spanning_trees(obj: LatticeDomain | GraphTable, exact_limit: int = 80) -> int | LogDet:
    """Number of spanning trees of the contracted graph.

    Returns an exact integer for graphs with at most ``exact_limit`` interior
    vertices and the natural log of the count (as a ``LogDet``) otherwise.
    """
    g = obj if isinstance(obj, GraphTable) else domain_graph(obj)
    if g.size <= exact_limit:
        return bareiss_det(_integer_laplacian(g))
    if isinstance(obj, LatticeDomain):
        return LogDet(domain_log_det(obj))
    return log_det(np.array(_integer_laplacian(g), dtype=float))


# -- Fredholm determinants --------------------------------------------------


def composite_matrix(h_cd: KernelOperator, h_dc: KernelOperator) -> np.ndarray:
    """Matrix of H^{c->d} after H^{d->c}, acting on functions on d."""
    if h_cd.kernel.shape[1] != h_dc.kernel.shape[0] or h_cd.source_cut != h_dc.target_cut:
        raise DimensionMismatch("operators do not compose: cut orders differ")
    return h_cd.kernel @ h_dc.kernel


def det_id_minus_HH(h_cd: KernelOperator, h_dc: KernelOperator) -> FredholmValue:
    m = composite_matrix(h_cd, h_dc)
    if m.size == 0:
        return FredholmValue(1.0)
    sign, val = np.linalg.slogdet(np.eye(len(m)) - m)
    if sign <= 0:
        raise ValueError("Id - HH is not positive: composite is not a contraction")
    return FredholmValue(float(math.exp(val)))


def elementary_symmetric(m: np.ndarray, order: int) -> np.ndarray:
    """e_0..e_order of the eigenvalues of ``m`` via Newton's identities on traces.

    ``e_k`` is the k-th term of the Fredholm expansion of det(Id + m): the sum of
    the k x k principal minors.
    """
    e = np.zeros(order + 1)
    e[0] = 1.0
    if order == 0:
        return e
    p = np.zeros(order + 1)
    power = np.eye(len(m))
    for j in range(1, order + 1):
        power = power @ m
        p[j] = np.trace(power)
    for k in range(1, order + 1):
        s = 0.0
        for i in range(1, k + 1):
            s += (-1) ** (i - 1) * e[k - i] * p[i]
        e[k] = s / k
    return e


def hadamard_tail(sup_kernel: float, mass: float, order: int, terms: int = 400) -> float:
    """Bound on the Fredholm terms beyond ``order``: sum of (K*mass)^k k^(k/2)/k!."""
    x = sup_kernel * mass
    if x == 0:
        return 0.0
    ks = np.arange(order + 1, order + 1 + terms, dtype=float)
    logs = ks * math.log(x) + 0.5 * ks * np.log(ks) - gammaln(ks + 1)
    top = logs.max()
    if top > 700:
        return math.inf
    return float(np.exp(logs).sum())


def fredholm_series(
    kernel: np.ndarray,
    base_measure: np.ndarray | None = None,
    order: int = 8,
) -> FredholmValue:
    """Truncated Fredholm expansion of det(Id + T).

    ``kernel`` is the density t(x, y) against ``base_measure``; the operator is
    (Tf)(x) = sum_y t(x, y) f(y) mu(y).  Without a base measure, ``kernel`` is the
    matrix of T itself (unit weights).  The tail bound is the Hadamard estimate
    with sup |t| and the total mass of mu.
    """
    kernel = np.asarray(kernel, dtype=float)
    mu = np.ones(kernel.shape[1]) if base_measure is None else np.asarray(base_measure, dtype=float)
    if kernel.shape[0] != kernel.shape[1] or kernel.shape[1] != len(mu):
        raise DimensionMismatch("kernel must be square and match the base measure")
    m = kernel * mu[None, :]
    e = elementary_symmetric(m, order)
    sup = float(np.abs(kernel).max()) if kernel.size else 0.0
    tail = hadamard_tail(sup, float(np.abs(mu).sum()), order)
    return FredholmValue(float(e.sum()), order, tail)


def composite_density(h_cd: KernelOperator, h_dc: KernelOperator) -> tuple[np.ndarray, np.ndarray]:
    """Density of -H^{c->d} H^{d->c} against the base measure of H^{d->c} on d."""
    m = composite_matrix(h_cd, h_dc)
    mu = h_dc.base_measure
    with np.errstate(divide="ignore", invalid="ignore"):
        dens = np.where(mu[None, :] > 0, -m / mu[None, :], 0.0)
    return dens, mu


# -- Radon-Nikodym derivative -----------------------------------------------


def _vertices(x) -> frozenset:
    if isinstance(x, Hull):
        return x.vertices
    if isinstance(x, LatticeCut):
        return x.vertex_set
    return frozenset(x)


def _check_separation(domain: LatticeDomain, blocker: frozenset, a: frozenset, b: frozenset) -> bool:
    """True when no interior path avoiding ``blocker`` joins ``a`` to ``b``."""
    reduced = cut_domain(domain, blocker)
    comps = interior_components(reduced)
    for comp in comps:
        touches_a = any(_touches(reduced, v, a) for v in comp)
        if touches_a and any(_touches(reduced, v, b) for v in comp):
            return False
    return True


def _touches(domain: LatticeDomain, v: Vertex, s: frozenset) -> bool:
    if v in s:
        return True
    i, j = v
    return any(((i + di, j + dj) in s) and not domain.is_free(v, (i + di, j + dj))
               for di, dj in ((1, 0), (0, 1), (-1, 0), (0, -1)))


def hull_domain(domain: LatticeDomain, hull: Hull | Iterable[Vertex]) -> LatticeDomain:
    """Domain minus a hull: hull vertices Dirichlet (or Neumann on its arc), crossed edges free."""
    if not isinstance(hull, Hull):
        hull = Hull.of(hull)
    if not hull:
        return domain
    base = _replace(domain, marked_interior=None)
    out = remove_set(base, hull, allow_disconnected=True)
    keep = domain.marked_interior if domain.marked_interior not in hull.vertices else None
    return _replace(out, marked_interior=keep)


def rn_derivative(
    domain: LatticeDomain,
    hull: Hull | Iterable[Vertex],
    c: LatticeCut | Iterable[Vertex],
    d1: LatticeCut | Iterable[Vertex],
    d2: LatticeCut | Iterable[Vertex],
    x0: Vertex | None = None,
) -> tuple[float, float]:
    """Radon-Nikodym derivative of the exploration law in A minus c against A.

    Returns ``(tree_ratio, harmonic_ratio)``: the ratio of spanning-tree counts
    written with four Laplacian determinants, and the ratio of the two
    determinants det(Id - H^{c->d} H^{d->c}) in A minus K and in A.
    """
    hull = hull if isinstance(hull, Hull) else Hull.of(hull)
    K = hull.vertices
    cv = frozenset(effective_cut(domain, c))
    dv = frozenset(effective_cut(domain, d1)) | frozenset(effective_cut(domain, d2))
    if (K & (cv | dv)) or (cv & dv):
        raise CutsIntersect("hull, c and d must be pairwise disjoint")
    if not K:
        return 1.0, 1.0
    if not _check_separation(domain, dv, cv, K):
        raise CutsDoNotSeparate("d1 and d2 do not separate c from the hull")
    AK = hull_domain(domain, hull)
    ld = domain_log_det
    tree = math.exp(ld(AK) + ld(cut_domain(domain, cv)) - ld(domain) - ld(cut_domain(AK, cv)))
    d_order = tuple(effective_cut(domain, d1)) + tuple(effective_cut(domain, d2))
    c_order = tuple(effective_cut(domain, c))

    def fredholm(dom):
        h_cd = extension_operator(dom, c_order, d_order, x0)
        h_dc = extension_operator(dom, d_order, c_order, x0)
        return det_id_minus_HH(h_cd, h_dc).value

    return tree, fredholm(AK) / fredholm(domain)


def ratio_det_laplacians(domain: LatticeDomain, k1: Iterable[Vertex], k2: Iterable[Vertex]) -> float:
    """det(D) det(D minus (K1 u K2)) / (det(D minus K1) det(D minus K2))."""
    k1, k2 = frozenset(k1), frozenset(k2)
    ld = domain_log_det
    return math.exp(
        ld(domain) + ld(cut_domain(domain, k1 | k2)) - ld(cut_domain(domain, k1)) - ld(cut_domain(domain, k2))
    )


def ratio_det_fredholm(domain: LatticeDomain, k1: Sequence[Vertex], k2: Sequence[Vertex]) -> float:
    """det(Id - H^{K1->K2} H^{K2->K1}) computed densely."""
    k1 = effective_cut(domain, k1)
    k2 = effective_cut(domain, k2)
    h12 = extension_operator(domain, k1, k2, with_base=False)
    h21 = extension_operator(domain, k2, k1, with_base=False)
    return det_id_minus_HH(h12, h21).value


# -- loops ------------------------------------------------------------------


def loop_free_domain(domain: LatticeDomain, loop: AnnulusLoop | Iterable) -> LatticeDomain:
    """Domain with the primal edges crossed by the loop made free (cut along the loop)."""
    crossed = loop.crossed_edges if isinstance(loop, AnnulusLoop) else frozenset(loop)
    return _replace(domain, free_edges=domain.free_edges | frozenset(crossed))


def loop_probability(domain: LatticeDomain, loop: AnnulusLoop | Iterable) -> float:
    """Probability that the wired tree's dual cycle is ``loop``."""
    return math.exp(domain_log_det(loop_free_domain(domain, loop)) - domain_log_det(domain))


def enumerate_loops(domain: LatticeDomain, limit: int = 200_000) -> list[AnnulusLoop]:
    """All simple dual cycles winding once around the hole, counterclockwise."""
    if euler_characteristic(domain) != 0 or len(domain.boundary_components) != 2:
        raise NotAnnular("loop enumeration needs an annular domain")
    ds = dual_structure(domain)
    n = len(ds.faces)
    adj: list[list[tuple[int, int, int]]] = [[] for _ in range(n)]
    h = hole_point(domain) / domain.mesh
    x_h = h.real
    y_ray = math.floor(h.imag) + 0.25
    for k, (a, b) in enumerate(ds.edge_faces):
        fa, fb = ds.faces[a], ds.faces[b]
        sign = 0
        if fa[0] == fb[0] and fa[0] + 0.5 > x_h:
            lo, hi = min(fa[1], fb[1]) + 0.5, max(fa[1], fb[1]) + 0.5
            if lo < y_ray < hi:
                sign = 1 if fb[1] > fa[1] else -1
        adj[a].append((int(b), k, sign))
        adj[b].append((int(a), k, -sign))
    loops: list[AnnulusLoop] = []
    for s in range(n):
        on_path = [False] * n
        on_path[s] = True
        path_faces = [s]
        path_edges: list[int] = []
        stack = [(s, iter(adj[s]), 0)]
        while stack:
            v, it, wind = stack[-1]
            step = next(it, None)
            if step is None:
                stack.pop()
                on_path[v] = False
                path_faces.pop()
                if path_edges:
                    path_edges.pop()
                continue
            u, k, sign = step
            if u == s and len(path_faces) >= 3 and (not path_edges or k != path_edges[-1]):
                if wind + sign == 1:
                    edges = path_edges + [k]
                    cycle = tuple(ds.faces[f] for f in path_faces)
                    loops.append(AnnulusLoop(cycle, frozenset(ds.edges[e] for e in edges), domain.mesh))
                    if len(loops) > limit:
                        raise TooLargeToEnumerate(f"more than {limit} loops")
                continue
            if u <= s or on_path[u]:
                continue
            on_path[u] = True
            path_faces.append(u)
            path_edges.append(k)
            stack.append((u, iter(adj[u]), wind + sign))
    return loops


def loop_law(domain: LatticeDomain, limit: int = 200_000) -> dict:
    """Map from loop key (frozenset of crossed edges) to its probability."""
    return {loop.key: loop_probability(domain, loop) for loop in enumerate_loops(domain, limit)}


def restriction_cocycle(
    domain: LatticeDomain,
    removed: Iterable[Vertex],
    loop: AnnulusLoop,
    d: LatticeCut | Iterable[Vertex],
) -> tuple[float, float]:
    """exp(-M) for A' = A minus H at the loop, by Laplacians and by Fredholm determinants.

    Returns ``(laplacian_ratio, fredholm_ratio)``.  The first is the ratio of four
    Laplacian determinants with the loop carrying free boundary conditions, the
    second det(Id - H^{dH->d} H^{d->dH}) in A over the same in A cut along the loop.
    """
    H = frozenset(removed)
    if not H:
        return 1.0, 1.0
    crossed = loop.crossed_edges
    loop_vertices = frozenset(v for e in crossed for v in e)
    if loop_vertices & H:
        raise LoopTouchesH("the loop crosses an edge touching the removed set")
    dv = frozenset(effective_cut(domain, d) if isinstance(d, LatticeCut) else (set(d) & set(domain.interior)))
    if dv & H:
        raise CutsIntersect("d meets the removed set")
    interior_loop = frozenset(v for v in loop_vertices if v in domain.interior_index)
    if not _check_separation(domain, dv, H, interior_loop - dv):
        raise LoopNotSeparated("d does not separate the removed set from the loop")
    A = domain
    A_l = loop_free_domain(A, loop)
    Ap = cut_domain(A, H)
    Ap_l = cut_domain(A_l, H)
    ld = domain_log_det
    lap = math.exp(ld(A) + ld(Ap_l) - ld(Ap) - ld(A_l))
    src = tuple(v for v in sorted(H) if v in A.interior_index)
    d_order = tuple(sorted(dv))

    def fredholm(dom):
        return det_id_minus_HH(
            extension_operator(dom, src, d_order, None), extension_operator(dom, d_order, src, None)
        ).value

    return lap, fredholm(A) / fredholm(A_l)
