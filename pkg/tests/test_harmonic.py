from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ustloop.grid import rectangle, square_annulus
from ustloop.harmonic import (
    assemble_laplacian,
    extension_operator,
    harmonic_measure,
    poisson_kernel,
)
from ustloop.determinants import composite_matrix
from ustloop.experiments import ring_vertices


def chain(n):
    """``n`` interior vertices in a row, reflecting above and below, Dirichlet at both ends."""
    free = [(i, j) for i in range(1, n + 1) for j in (0, 2)]
    return rectangle(n + 1, 2, neumann=free)


def test_stencils():
    assert assemble_laplacian(rectangle(2, 2)).matrix.toarray().tolist() == [[4.0]]
    assert assemble_laplacian(rectangle(2, 2, neumann=[(1, 0)])).matrix.toarray().tolist() == [[3.0]]
    assert assemble_laplacian(rectangle(3, 2)).matrix.toarray().tolist() == [[4, -1], [-1, 4]]


def test_laplacian_spd():
    m = assemble_laplacian(square_annulus(12, 4)).matrix.toarray()
    assert np.allclose(m, m.T)
    assert np.linalg.eigvalsh(m).min() > 0


def test_chain_harmonic_measure():
    dom = chain(3)
    L, R = (0, 1), (4, 1)
    hm = harmonic_measure(dom, (2, 1))
    assert hm[L] == pytest.approx(0.5, abs=1e-14) and hm[R] == pytest.approx(0.5, abs=1e-14)
    hm = harmonic_measure(dom, (3, 1))
    assert hm[R] == pytest.approx(0.75, abs=1e-14) and hm[L] == pytest.approx(0.25, abs=1e-14)


def test_chain_poisson_kernel():
    dom = chain(3)
    assert poisson_kernel(dom, (2, 1), (4, 1), (3, 1)) == pytest.approx(1.5, abs=1e-13)
    for y in ((0, 1), (4, 1)):
        assert poisson_kernel(dom, (2, 1), y, (2, 1)) == pytest.approx(1.0)


def test_poisson_kernel_half_plane():
    # box approximation of the upper half-plane; continuum value -Im(1/z) = 1 at z = (1+i)/2
    mesh, n = 1 / 8, 64
    dom = rectangle(2 * n, n, mesh=mesh)
    at = lambda z: (n + round(z.real / mesh), round(z.imag / mesh))
    value = poisson_kernel(dom, at(1j), at(0j), at(0.5 + 0.5j))
    assert value == pytest.approx(-(1 / (0.5 + 0.5j)).imag, rel=0.03)


def test_chain_extension_is_linear_interpolation():
    dom = chain(5)
    op = extension_operator(dom, [(1, 1)], [(3, 1)])
    # v1 carries 1, the right end (6, 1) carries 0; v3 sits 2 of 5 steps from v1
    assert op.kernel[0, 0] == pytest.approx(3 / 5, abs=1e-14)


def test_extension_of_constant_leaks():
    dom = square_annulus(16, 4)
    c, d = ring_vertices(16, 4), ring_vertices(16, 6)
    op = extension_operator(dom, c, d)
    ones = op.apply(np.ones(len(op.source_cut)))
    assert np.all(ones < 1) and np.all(ones > 0)
    assert op.sup_norm() < 1


def test_composite_is_contraction():
    dom = square_annulus(20, 6)
    c, d = ring_vertices(20, 5), ring_vertices(20, 8)
    m = composite_matrix(extension_operator(dom, c, d), extension_operator(dom, d, c))
    assert np.abs(m).sum(axis=1).max() < 1


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 6), st.integers(1, 3), st.data())
def test_harmonic_measure_is_probability(half, hole_half, data):
    n = 2 * hole_half + 2 * half
    dom = square_annulus(n, 2 * hole_half)
    v = dom.interior[data.draw(st.integers(0, len(dom.interior) - 1))]
    hm = harmonic_measure(dom, v)
    assert sum(hm.values()) == pytest.approx(1.0, abs=1e-12)
    assert min(hm.values()) >= 0
