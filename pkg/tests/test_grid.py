from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ustloop.errors import CutNotSeparating, DegenerateApproximation, MarkedPointRemoved
from ustloop.grid import (
    AnnulusSpec,
    LatticeDomain,
    approximate_annulus,
    approximate_cut,
    euler_characteristic,
    face_corners,
    from_faces,
    is_simply_connected,
    radial_polyline,
    rectangle,
    remove_set,
    split_neumann_vertices,
    square_annulus,
)


def faces_in_ring_bruteforce(r_in, r_out, mesh):
    """Every face whose four corners lie strictly inside the open ring."""
    n = int(math.ceil(r_out / mesh)) + 2
    out = set()
    for i in range(-n, n):
        for j in range(-n, n):
            ok = True
            for di, dj in ((0, 0), (1, 0), (0, 1), (1, 1)):
                r = math.hypot((i + di) * mesh, (j + dj) * mesh)
                ok &= r_in < r < r_out
            if ok:
                out.add((i, j))
    return out


def test_annulus_too_coarse():
    with pytest.raises(DegenerateApproximation):
        approximate_annulus(AnnulusSpec(0j, 1, 3), 2.5, 2 + 0j)


def test_annulus_face_count_matches_enumeration():
    dom = approximate_annulus(AnnulusSpec(0j, 1, 3), 0.5, 2 + 0j)
    assert set(dom.faces) == faces_in_ring_bruteforce(1, 3, 0.5)
    assert euler_characteristic(dom) == 0
    assert len(dom.boundary_components) == 2


def test_refinement_containment():
    spec = AnnulusSpec(0j, 1, 3)
    coarse = approximate_annulus(spec, 0.5, 2 + 0j)
    fine = approximate_annulus(spec, 0.25, 2 + 0j)
    for i, j in coarse.faces:
        for di in (0, 1):
            for dj in (0, 1):
                assert (2 * i + di, 2 * j + dj) in fine.faces


def test_domain_invariants():
    dom = approximate_annulus(AnnulusSpec(0j, 1, 3), 0.25, 2 + 0j)
    assert not (dom.dirichlet & dom.neumann)
    assert dom.dirichlet | dom.neumann == dom.boundary
    assert dom.marked_interior in dom.interior_index
    # every boundary vertex misses at least one of its four faces
    for v in dom.boundary:
        count = sum((v[0] - a, v[1] - b) in dom.faces for a in (0, 1) for b in (0, 1))
        assert count < 4


def test_radial_cut_sides():
    dom = approximate_annulus(AnnulusSpec(0j, 1, 3), 0.25, 2 + 0j)
    poly = radial_polyline(0j, 1, 3, 0.0)  # travels outward along the positive real axis
    below = approximate_cut(dom, poly, "right")
    above = approximate_cut(dom, poly, "left")
    assert {v[1] for v in below.vertices} == {-1}
    assert {v[1] for v in above.vertices} == {1}
    assert all(1 <= v[0] * 0.25 <= 3 for v in below.vertices)
    assert below.vertices != above.vertices
    for cut in (below, above):
        cut_dom = remove_set(dom, cut)
        assert is_simply_connected(cut_dom)
        assert cut.vertex_set <= cut_dom.dirichlet


def test_interior_polyline_not_separating():
    dom = approximate_annulus(AnnulusSpec(0j, 1, 3), 0.25, 2 + 0j)
    with pytest.raises(CutNotSeparating):
        approximate_cut(dom, [1.8 + 0j, 2.2 + 0j], "left")


def test_remove_marked_point():
    dom = square_annulus(10, 2)
    with pytest.raises(MarkedPointRemoved):
        remove_set(dom, {dom.marked_interior})


def test_split_neumann_single_edge():
    # 2x2 faces: one interior vertex (1,1); the edge midpoint (1,0) is Neumann with one interior edge
    dom = rectangle(2, 2, neumann=[(1, 0)])
    g = split_neumann_vertices(dom)
    assert sum(1 for _, kind in g.nodes.values() if kind == "neumann") == 1


def test_split_neumann_corner():
    # L-shaped block: the reflex corner (2, 2) touches two interior vertices
    faces = {(i, j) for i in range(4) for j in range(4)} - {(2, 2), (3, 2), (2, 3), (3, 3)}
    dom = from_faces(faces, 1.0, None, None, neumann=[(2, 2)])
    g = split_neumann_vertices(dom)
    n_copies = sum(1 for v, kind in g.nodes.values() if kind == "neumann" and v == (2, 2))
    n_edges = sum(1 for e in dom.edges if (2, 2) in e and any(u in dom.interior_index for u in e))
    assert n_edges == 2
    assert n_copies == n_edges


def test_split_all_dirichlet_unchanged():
    dom = square_annulus(8, 2)
    g = split_neumann_vertices(dom)
    assert all(kind != "neumann" for _, kind in g.nodes.values())
    assert len(g.edges) == sum(1 for e in dom.edges if any(u in dom.interior_index for u in e))


def test_json_round_trip():
    dom = square_annulus(8, 2)
    back = LatticeDomain.from_json(dom.to_json())
    assert back.faces == dom.faces and back.dirichlet == dom.dirichlet
    assert back.marked_interior == dom.marked_interior


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 9), st.integers(1, 4))
def test_square_annulus_topology(half, hole_half):
    hole = 2 * hole_half
    n = hole + 2 * half
    dom = square_annulus(n, hole)
    assert euler_characteristic(dom) == 0
    assert len(dom.boundary_components) == 2
    assert len(dom.faces) == n * n - hole * hole
    assert all(len(face_corners(f)) == 4 for f in dom.faces)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 0.6), st.floats(1.5, 3.0))
def test_annulus_faces_inside(mesh, r_out):
    spec = AnnulusSpec(0j, 0.5, r_out + 0.5)
    try:
        dom = approximate_annulus(spec, mesh, complex((spec.inner_radius + spec.outer_radius) / 2, 0))
    except DegenerateApproximation:
        return
    pts = dom.points(dom.vertices)
    r = np.abs(pts)
    assert np.all(r > spec.inner_radius) and np.all(r < spec.outer_radius)
