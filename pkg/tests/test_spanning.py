from __future__ import annotations

import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ustloop.determinants import count_spanning_trees, hull_domain
from ustloop.errors import NotAnnular
from ustloop.experiments import grid_graph, wilson_uniformity_report
from ustloop.grid import radial_polyline, rectangle, square_annulus
from ustloop.spanning import (
    SpanningTree,
    domain_graph,
    disconnection_time,
    disconnection_time_bruteforce,
    dual_complement,
    exploration_path,
    extract_loop,
    hitting_time,
    plain_graph,
    sample_loop_masks,
    wilson_sample,
    wilson_slots,
)

CYCLE4 = [(0, 1), (1, 2), (2, 3), (3, 0)]


@pytest.mark.parametrize("name,edges", [("C4", CYCLE4), ("grid2x3", grid_graph(2, 3))])
def test_wilson_uniform_small(name, edges):
    rep = wilson_uniformity_report(name, edges, 3000, seed=11)
    assert rep.passed, rep.row()


def test_path_graph_has_one_tree():
    g = plain_graph([(0, 1), (1, 2), (2, 3)], [0])
    trees = {wilson_sample(g, s).key() for s in range(20)}
    assert len(trees) == 1
    assert wilson_sample(g, 0).parent == {1: 0, 2: 1, 3: 2}


def test_same_seed_same_tree():
    dom = square_annulus(12, 4)
    assert wilson_sample(dom, 5).key() == wilson_sample(dom, 5).key()
    rows = wilson_slots(dom, [5, 6])
    assert tuple(rows[0]) == wilson_sample(dom, 5).key()


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_trees_are_valid(seed):
    dom = square_annulus(10, 4)
    tree = wilson_sample(dom, seed)
    assert tree.is_valid()
    assert len(tree.parent) == len(dom.interior)


def test_dual_complement_counts():
    dom = square_annulus(10, 2)
    tree = wilson_sample(dom, 3)
    dual = dual_complement(tree, dom)
    # consecutive faces of the loop are joined by dual edges of the complement
    loop = extract_loop(tree, dom)
    cycle_pairs = set(zip(loop.cycle, loop.cycle[1:] + loop.cycle[:1]))
    assert all((a, b) in dual or (b, a) in dual for a, b in cycle_pairs)


def test_width_one_ring_loop_is_deterministic():
    dom = square_annulus(3, 1)
    loops = {extract_loop(wilson_sample(dom, s), dom).key for s in range(5)}
    assert len(loops) == 1
    assert len(next(iter(loops))) == 8


def test_loop_winds_once():
    dom = square_annulus(14, 4)
    for s in range(10):
        loop = extract_loop(wilson_sample(dom, s), dom)
        assert loop.winding_number(7 + 7j) == 1
    masks = sample_loop_masks(dom, list(range(10)))
    assert masks.shape[0] == 10 and masks.any(axis=1).all()


def test_loop_needs_annulus():
    dom = rectangle(4, 4)
    with pytest.raises(NotAnnular):
        extract_loop(wilson_sample(dom, 0), dom)


def test_exploration_of_wired_rectangle_visits_every_corner():
    dom = rectangle(5, 4)
    path = exploration_path(wilson_sample(dom, 3), dom)
    assert path.closed
    assert len(path) == len(set(path.points.tolist())) == 4 * len(dom.faces)


def test_exploration_deterministic():
    dom = square_annulus(12, 4)
    a = exploration_path(wilson_sample(dom, 9), dom)
    b = exploration_path(wilson_sample(dom, 9), dom)
    assert np.array_equal(a.points, b.points)
    # consecutive positions are quarter-lattice neighbours
    steps = np.abs(np.diff(a.positions))
    assert np.allclose(steps, 0.5)


def test_hitting_time_monotone_in_epsilon():
    dom = square_annulus(16, 4)
    path = exploration_path(wilson_sample(dom, 2), dom)
    cut = radial_polyline(8 + 8j, 2, 8, 0.0)
    times = [hitting_time(path, cut, eps) for eps in (0.5, 1.0, 2.0, 4.0)]
    assert all(a >= b for a, b in zip(times, times[1:]))
    assert times[-1] < math.inf


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(8, 2), (10, 4), (12, 2)]))
def test_disconnection_matches_bruteforce(seed, shape):
    dom = square_annulus(*shape)
    path = exploration_path(wilson_sample(dom, seed), dom)
    assert disconnection_time(path, dom) == disconnection_time_bruteforce(path, dom)


def all_wired_trees(dom):
    """Every wired spanning tree, as parent-slot assignments that reach the root."""
    g = domain_graph(dom)
    choices = [[s for s in range(g.table.shape[1]) if g.table[v, s] >= 0 or g.table[v, s] == -1]
               for v in range(g.size)]
    trees = [SpanningTree(g, np.array(slots)) for slots in itertools.product(*choices)]
    return [t for t in trees if t.is_valid()]


@pytest.mark.parametrize("k", [3, 6, 10])
def test_spatial_markov_exact(k):
    # uniform trees sharing the first k exploration steps are in bijection with trees of the slit domain
    dom = rectangle(4, 3)
    trees = all_wired_trees(dom)
    assert len(trees) == count_spanning_trees(dom)
    paths = [exploration_path(t, dom) for t in trees]
    groups = Counter(tuple(p.points[:k].tolist()) for p in paths)
    first = {}
    for p in paths:
        first.setdefault(tuple(p.points[:k].tolist()), p)
    for key, size in groups.items():
        assert size == count_spanning_trees(hull_domain(dom, first[key].hull(k)))


def test_single_face_exploration_circles_once():
    dom = rectangle(1, 1)
    path = exploration_path(wilson_sample(dom, 0), dom)
    assert len(path) == 4 and path.closed
    assert len(set(np.round(path.positions, 9).tolist())) == 4


def test_hitting_time_trivial_cases():
    dom = square_annulus(16, 4)
    path = exploration_path(wilson_sample(dom, 1), dom)
    start = path.positions[0]
    assert hitting_time(path, [start, start + 0.1], 1.0) == 0
    assert hitting_time(path, radial_polyline(8 + 8j, 2, 8, 1.0), 100.0) == 0


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 2 * math.pi))
def test_disconnection_after_every_cut_is_approached(seed, angle):
    dom = square_annulus(12, 4)
    path = exploration_path(wilson_sample(dom, seed), dom)
    T = disconnection_time(path, dom)
    cut = radial_polyline(6 + 6j, 2, 8.5, angle)
    assert T >= hitting_time(path, cut, 1.0)
