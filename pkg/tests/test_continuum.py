from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ustloop.continuum import (
    _cocycle_discrete,
    circle_nodes,
    cocycle_M,
    cocycle_M_modes,
    concentric_nystrom,
    continuum_fredholm_concentric,
    mode_multiplier,
    neumann_profile,
    nystrom_fredholm,
    radial_profile,
)
from ustloop.errors import LoopNotSeparated, RadiusOutOfRange
from ustloop.grid import AnnulusSpec

ANN = AnnulusSpec(0j, 1.0, 4.0)


def circle(r, n=400):
    return list(r * np.exp(2j * np.pi * np.arange(n) / n))


def test_radial_profile_closed_form():
    a, b = 2.0, 4.0
    for r in (2.5, 3.0, 3.7):
        assert radial_profile(0, r, a, b) == pytest.approx(math.log(r / b) / math.log(a / b))
        for n in (1, 3, 7):
            f = lambda s: s ** n - b ** (2 * n) * s ** (-n)
            assert radial_profile(n, r, a, b) == pytest.approx(f(r) / f(a), rel=1e-12)


def test_neumann_profile_flat_at_free_circle():
    r_free, h = 3.0, 1e-5
    for n in (1, 2, 5):
        up = neumann_profile(n, r_free * math.exp(h), 1.5, r_free)
        down = neumann_profile(n, r_free * math.exp(-h), 1.5, r_free)
        assert abs(up - down) < 1e-8
        assert neumann_profile(n, 1.5, 1.5, r_free) == pytest.approx(1.0)


def test_mode_multiplier_edges():
    assert mode_multiplier(ANN, 2.0, 2.0, 3).value == 1.0
    with pytest.raises(RadiusOutOfRange):
        mode_multiplier(ANN, 0.5, 2.0, 1)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.1, 3.9), st.floats(1.1, 3.9), st.integers(0, 30))
def test_multiplier_is_a_contraction_decreasing_in_mode(a, b, n):
    m0 = mode_multiplier(ANN, a, b, n).value
    m1 = mode_multiplier(ANN, a, b, n + 1).value
    assert 0.0 <= m1 <= m0 <= 1.0


def test_mode_product_matches_nystrom():
    prod = continuum_fredholm_concentric(ANN, 2.0, (1.5, 3.0))
    quad = concentric_nystrom(ANN, 2.0, (1.5, 3.0))
    assert 0 < prod.value < 1
    assert quad.value == pytest.approx(prod.value, rel=1e-10)


def test_truncated_product_converges():
    full = continuum_fredholm_concentric(ANN, 2.0, (1.5, 3.0)).value
    vals = [continuum_fredholm_concentric(ANN, 2.0, (1.5, 3.0), n_modes=k).value for k in (2, 8, 32)]
    errs = [abs(v - full) for v in vals]
    assert errs[0] > errs[1] > errs[2]


def test_nystrom_rank_one():
    theta, w = circle_nodes(32)
    # k(x, y) = 0.4 cos(x) cos(y): integral against d theta / 2 pi of cos^2 is 1/2
    val = nystrom_fredholm(lambda x, y: 0.4 * np.cos(x) * np.cos(y), theta, w).value
    assert val == pytest.approx(1 - 0.2, rel=1e-12)


def test_cocycle_zero_when_nothing_removed():
    assert cocycle_M(ANN, ANN, circle(2.5)) == 0.0


def test_cocycle_independent_of_d():
    sub = AnnulusSpec(0j, 1.3, 4.0)
    ref = cocycle_M_modes(ANN, sub, 2.5, 1.8)
    for rd in (1.5, 1.8, 2.2):
        assert cocycle_M(ANN, sub, circle(2.5), rd) == pytest.approx(ref, rel=1e-10)
        assert cocycle_M_modes(ANN, sub, 2.5, rd) == pytest.approx(ref, rel=1e-10)


def test_cocycle_additivity():
    a2, a3 = AnnulusSpec(0j, 1.2, 4.0), AnnulusSpec(0j, 1.45, 4.0)
    loop = circle(2.5)
    lhs = cocycle_M(ANN, a2, loop) + cocycle_M(a2, a3, loop)
    assert lhs == pytest.approx(cocycle_M(ANN, a3, loop), abs=1e-4)


def test_cocycle_rejects_bad_loop():
    sub = AnnulusSpec(0j, 1.3, 4.0)
    with pytest.raises(LoopNotSeparated):
        cocycle_M(ANN, sub, circle(1.2))


def test_cocycle_discrete_approaches_modes():
    sub = AnnulusSpec(0j, 1.3, 4.0)
    ref = cocycle_M_modes(ANN, sub, 2.5, 1.8)
    coarse = _cocycle_discrete(ANN, sub, circle(2.5), 1 / 16)
    fine = _cocycle_discrete(ANN, sub, circle(2.5), 1 / 32)
    assert abs(fine - ref) < abs(coarse - ref)
    # first-order convergence: Richardson extrapolation lands close
    assert 2 * fine - coarse == pytest.approx(ref, rel=0.03)
