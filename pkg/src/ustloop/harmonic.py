"""Discrete harmonic analysis on lattice domains.

The Laplacian acts on interior vertices.  A link to a Dirichlet vertex adds one
to the diagonal and couples to the boundary data; a free link (Neumann vertex or
free edge) reflects the walk and contributes nothing, which is the same as
attaching the interior vertex to its own split copy of the Neumann vertex.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import CutsIntersect, SingularSystem, ZeroDenominator
from .grid import (
    LINK_DIRICHLET,
    LINK_FREE,
    LatticeCut,
    LatticeDomain,
    Vertex,
    _replace,
    remove_set,
)


@dataclass(frozen=True, eq=False)
class LaplacianSystem:
    interior: tuple
    interior_index: dict
    matrix: sp.csc_matrix
    boundary_links: tuple  # per interior vertex: Dirichlet neighbours (with multiplicity)
    dirichlet: tuple  # column order of ``coupling``
    coupling: sp.csr_matrix  # n x m, entry 1 per Dirichlet link

    @property
    def size(self) -> int:
        return len(self.interior)

    @cached_property
    def dirichlet_index(self) -> dict:
        return {v: k for k, v in enumerate(self.dirichlet)}

    @cached_property
    def factor(self):
        if self.size == 0:
            return None
        if not self.dirichlet:
            raise SingularSystem("no Dirichlet boundary: the Laplacian is singular")
        try:
            return splu(
                self.matrix,
                permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=0.0,
                options={"SymmetricMode": True},
            )
        except RuntimeError as exc:  # exactly singular
            raise SingularSystem(str(exc)) from exc

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self.size == 0:
            return np.zeros_like(rhs, dtype=float)
        return self.factor.solve(np.asarray(rhs, dtype=float))

    @cached_property
    def log_det(self) -> float:
        if self.size == 0:
            return 0.0
        diag = self.factor.U.diagonal()
        if np.any(diag <= 0):
            raise SingularSystem("non-positive pivot: matrix is not positive definite")
        return float(np.sum(np.log(diag)))


def assemble_laplacian(domain: LatticeDomain) -> LaplacianSystem:
    table, targets = domain.link_table
    n = len(domain.interior)
    deg = np.count_nonzero(table != LINK_FREE, axis=1).astype(float)
    rows, cols = np.nonzero(table >= 0)
    nbrs = table[rows, cols]
    mat = sp.csc_matrix(
        (np.concatenate([deg, -np.ones(len(rows))]),
         (np.concatenate([np.arange(n), rows]), np.concatenate([np.arange(n), nbrs]))),
        shape=(n, n),
    )
    links = tuple(tuple(u for u in row if u is not None) for row in targets)
    dirichlet = tuple(sorted({u for row in links for u in row}))
    dindex = {v: k for k, v in enumerate(dirichlet)}
    b_rows = [k for k, row in enumerate(links) for _ in row]
    b_cols = [dindex[u] for row in links for u in row]
    coupling = sp.csr_matrix((np.ones(len(b_rows)), (b_rows, b_cols)), shape=(n, len(dirichlet)))
    return LaplacianSystem(domain.interior, domain.interior_index, mat, links, dirichlet, coupling)


def laplacian_of(domain: LatticeDomain) -> LaplacianSystem:
    """Cached Laplacian (and factorization) attached to a domain instance."""
    cached = domain.__dict__.get("_laplacian")
    if cached is None:
        cached = assemble_laplacian(domain)
        domain.__dict__["_laplacian"] = cached
    return cached


def harmonic_measure_vector(domain: LatticeDomain, start: Vertex) -> tuple[tuple, np.ndarray]:
    """Harmonic measure from ``start`` as (Dirichlet vertices, weights)."""
    system = laplacian_of(domain)
    if start not in system.interior_index:
        if start in domain.dirichlet:
            return (start,), np.ones(1)
        raise ValueError(f"{start} is neither interior nor Dirichlet")
    if not system.dirichlet:
        raise SingularSystem("no Dirichlet boundary")
    e = np.zeros(system.size)
    e[system.interior_index[start]] = 1.0
    green_row = system.solve(e)
    return system.dirichlet, system.coupling.T @ green_row


def harmonic_measure(domain: LatticeDomain, start: Vertex) -> dict:
    vs, w = harmonic_measure_vector(domain, start)
    return {v: float(x) for v, x in zip(vs, w) if x != 0.0}


def poisson_kernel(domain: LatticeDomain, x0: Vertex, y: Vertex, x: Vertex) -> float:
    """Poisson kernel at boundary point ``y`` normalized at ``x0``, evaluated at ``x``."""
    denom = harmonic_measure(domain, x0).get(y, 0.0)
    if denom <= 0.0:
        raise ZeroDenominator(f"{y} is not reachable from {x0}")
    return harmonic_measure(domain, x).get(y, 0.0) / denom


def harmonic_extension(domain: LatticeDomain, data: dict) -> dict:
    """Harmonic function with the given Dirichlet data (missing entries are 0)."""
    system = laplacian_of(domain)
    g = np.array([data.get(v, 0.0) for v in system.dirichlet])
    u = system.solve(system.coupling @ g)
    out = {v: float(val) for v, val in zip(system.interior, u)}
    out.update({v: float(data.get(v, 0.0)) for v in system.dirichlet})
    return out


def effective_cut(domain: LatticeDomain, cut: LatticeCut | Iterable[Vertex]) -> tuple:
    """Cut vertices that are interior to ``domain``.

    Cut vertices already on the Dirichlet boundary carry zero data and are dropped.
    """
    verts = cut.vertices if isinstance(cut, LatticeCut) else tuple(cut)
    index = domain.interior_index
    seen: set = set()
    out = []
    for v in verts:
        if v in index and v not in seen:
            seen.add(v)
            out.append(v)
    return tuple(out)


@dataclass(frozen=True, eq=False)
class KernelOperator:
    """Harmonic extension from a source cut to a target cut.

    ``kernel[i, j]`` is the harmonic measure of source vertex ``j`` seen from
    target vertex ``i`` in the domain cut along the source.  ``base_measure`` is
    the harmonic measure of the source vertices from the marked point in that same
    cut domain, so ``kernel / base_measure`` is the normalized Poisson kernel.
    """

    source_cut: tuple
    target_cut: tuple
    kernel: np.ndarray
    base_measure: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def shape(self):
        return self.kernel.shape

    @cached_property
    def density(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            d = self.kernel / self.base_measure[None, :]
        return np.where(self.base_measure[None, :] > 0, d, 0.0)

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.kernel @ f

    def sup_norm(self) -> float:
        """Operator norm on bounded functions (max row sum)."""
        if self.kernel.size == 0:
            return 0.0
        return float(np.abs(self.kernel).sum(axis=1).max())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["target_i", "target_j"] + [f"{v[0]}" for v in self.source_cut])
            w.writerow(["", ""] + [f"{v[1]}" for v in self.source_cut])
            for v, row in zip(self.target_cut, self.kernel):
                w.writerow([v[0], v[1]] + [repr(float(x)) for x in row])


def cut_domain(domain: LatticeDomain, vertices: Iterable[Vertex]) -> LatticeDomain:
    """``domain`` with ``vertices`` made Dirichlet; marks are dropped if removed."""
    vertices = frozenset(vertices)
    cache = domain.__dict__.setdefault("_cut_cache", {})
    if vertices in cache:
        return cache[vertices]
    marked = domain.marked_interior if domain.marked_interior not in vertices else None
    base = _replace(domain, marked_interior=None)
    out = _replace(remove_set(base, vertices, allow_disconnected=True), marked_interior=marked)
    if len(cache) >= 16:
        cache.pop(next(iter(cache)))
    cache[vertices] = out
    return out


def extension_operator(
    domain: LatticeDomain,
    source: LatticeCut | Iterable[Vertex],
    target: LatticeCut | Iterable[Vertex],
    x0: Vertex | None = None,
    with_base: bool = True,
) -> KernelOperator:
    """Harmonic extension operator; ``with_base=False`` skips the base measure at x0."""
    src = effective_cut(domain, source)
    tgt = effective_cut(domain, target)
    if set(src) & set(tgt):
        raise CutsIntersect("source and target cuts share vertices")
    x0 = (domain.marked_interior if x0 is None else x0) if with_base else None
    if x0 is not None and x0 in set(src):
        raise CutsIntersect("the marked point lies on the source cut")
    reduced = cut_domain(domain, src)
    system = laplacian_of(reduced)
    if not src:
        return KernelOperator(src, tgt, np.zeros((len(tgt), 0)), np.zeros(0))
    # a source vertex with no interior neighbour left contributes a zero column
    b_src = np.zeros((system.size, len(src)))
    present = [k for k, v in enumerate(src) if v in system.dirichlet_index]
    if present:
        cols = np.array([system.dirichlet_index[src[k]] for k in present])
        b_src[:, present] = system.coupling[:, cols].toarray()
    kernel = np.zeros((len(tgt), len(src)))
    t_rows = [k for k, v in enumerate(tgt) if v in system.interior_index]
    if t_rows:
        # solve once per source column: u_x = L^{-1} B e_x, then restrict to targets
        u = system.solve(b_src)
        idx = np.array([system.interior_index[tgt[k]] for k in t_rows])
        kernel[t_rows, :] = u[idx, :]
    base = np.zeros(len(src))
    if x0 is not None and x0 in system.interior_index:
        e = np.zeros(system.size)
        e[system.interior_index[x0]] = 1.0
        base = b_src.T @ system.solve(e)
    np.clip(kernel, 0.0, None, out=kernel)
    return KernelOperator(src, tgt, kernel, base)
