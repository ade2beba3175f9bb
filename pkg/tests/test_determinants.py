from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ustloop.determinants import (
    bareiss_det,
    count_spanning_trees,
    domain_log_det,
    elementary_symmetric,
    enumerate_loops,
    fredholm_series,
    hadamard_tail,
    log_det,
    loop_free_domain,
    loop_law,
    restriction_cocycle,
    rn_derivative,
)
from ustloop.errors import CutsDoNotSeparate
from ustloop.experiments import (
    brute_force_tree_count,
    cocycle_reports,
    default_rn_setup,
    fredholm_truncation_report,
    random_identity_cases,
    rn_identity_reports,
    small_graph_corpus,
)
from ustloop.grid import rectangle, square_annulus
from ustloop.harmonic import assemble_laplacian
from ustloop.spanning import extract_loop, plain_graph, wilson_sample


def test_log_det_small():
    assert float(log_det(assemble_laplacian(rectangle(2, 2)))) == pytest.approx(math.log(4))
    assert float(log_det(assemble_laplacian(rectangle(3, 2)))) == pytest.approx(math.log(15))


def test_log_det_matches_dense():
    system = assemble_laplacian(rectangle(6, 5))
    sign, dense = np.linalg.slogdet(system.matrix.toarray())
    assert sign == 1
    assert system.log_det == pytest.approx(dense, rel=1e-12)


@pytest.mark.parametrize("name,n,edges", [g for g in small_graph_corpus() if len(g[2]) <= 16])
def test_tree_count_matches_enumeration(name, n, edges):
    assert count_spanning_trees(plain_graph(edges, [0])) == brute_force_tree_count(n, edges)


def test_known_tree_counts():
    counts = {name: count_spanning_trees(plain_graph(edges, [0])) for name, _, edges in small_graph_corpus()}
    assert counts["K6"] == 6 ** 4
    assert counts["petersen"] == 2000
    assert counts["C7"] == 7


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.integers(-5, 5), min_size=4, max_size=4), min_size=4, max_size=4))
def test_bareiss_matches_float(rows):
    assert bareiss_det(rows) == round(np.linalg.det(np.array(rows, dtype=float)))


def test_elementary_symmetric_principal_minors():
    rng = np.random.default_rng(1)
    m = rng.normal(size=(5, 5))
    e = elementary_symmetric(m, 5)
    for k in range(1, 6):
        minors = sum(np.linalg.det(m[np.ix_(s, s)]) for s in itertools.combinations(range(5), k))
        assert e[k] == pytest.approx(minors, rel=1e-10, abs=1e-12)
    assert e.sum() == pytest.approx(np.linalg.det(np.eye(5) + m), rel=1e-10)


def test_fredholm_low_orders():
    m = np.array([[0.1, 0.2], [0.05, -0.3]])
    assert fredholm_series(m, order=0).value == 1.0
    assert fredholm_series(m, order=1).value == pytest.approx(1 + np.trace(m))
    assert fredholm_series(m, order=2).value == pytest.approx(np.linalg.det(np.eye(2) + m))


def test_fredholm_rank_one_and_zero():
    u, v = np.array([0.3, -0.1, 0.2]), np.array([0.5, 0.4, -0.2])
    val = fredholm_series(np.outer(u, v), order=6).value
    assert val == pytest.approx(1 + v @ u, rel=1e-12)
    zero = fredholm_series(np.zeros((3, 3)), order=4)
    assert zero.value == 1.0 and zero.tail_bound == 0.0


def test_hadamard_tail_decreases_with_order():
    tails = [hadamard_tail(1.0, 0.5, k) for k in (2, 4, 8)]
    assert tails[0] > tails[1] > tails[2] > 0


def test_fredholm_truncation_within_tail():
    reps = fredholm_truncation_report(n=20, hole=6, order=8)
    assert all(r.passed for r in reps), [r.row() for r in reps]


def test_ratio_det_identity_random():
    reps = random_identity_cases(6, seed=4, max_size=24)
    assert all(r.passed for r in reps), [r.row() for r in reps if not r.passed]


def test_rn_empty_hull_is_one():
    s = default_rn_setup()
    assert rn_derivative(s.domain, [], s.c, s.d1, s.d2) == (1.0, 1.0)


def test_rn_identity_short_paths():
    reps = rn_identity_reports(3, seed=2)
    assert all(r.passed for r in reps), [r.row() for r in reps]


def test_rn_rejects_unseparated_hull():
    s = default_rn_setup()
    # a hull next to c, between the two d cuts
    with pytest.raises(CutsDoNotSeparate):
        rn_derivative(s.domain, [(20, 12)], s.c, s.d1, s.d2)


def test_cocycle_empty_and_sampled():
    dom = square_annulus(12, 4)
    loop = extract_loop(wilson_sample(dom, 0), dom)
    assert restriction_cocycle(dom, [], loop, []) == (1.0, 1.0)
    reps = cocycle_reports(seed=1, n_loops=2)
    assert reps and all(r.passed for r in reps)


def test_width_one_ring_loop_law():
    law = loop_law(square_annulus(3, 1))
    assert list(law.values()) == [pytest.approx(1.0)]


def test_loop_law_sums_to_one_and_matches_exact_counts():
    dom = square_annulus(5, 1)
    loops = enumerate_loops(dom)
    law = loop_law(dom)
    assert len(law) == len(loops)
    assert sum(law.values()) == pytest.approx(1.0, abs=1e-10)
    total = count_spanning_trees(dom)
    for loop in loops[:20]:
        exact = count_spanning_trees(loop_free_domain(dom, loop)) / total
        assert law[loop.key] == pytest.approx(exact, rel=1e-10)


def test_domain_log_det_is_tree_count():
    dom = square_annulus(6, 2)
    assert domain_log_det(dom) == pytest.approx(math.log(count_spanning_trees(dom)), rel=1e-12)
