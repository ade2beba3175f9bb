from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ustloop import sle
from ustloop.errors import ProbeNotHit
from ustloop.experiments import besq_mean_check, zero_driving_error


def grid(dt, horizon):
    return np.arange(int(round(horizon / dt)) + 1) * dt


def test_constant_bessel_integral_and_driving():
    t = grid(0.01, 1.0)
    x = np.full_like(t, 0.7)
    b = sle.BesselPath(t, x)
    assert np.allclose(sle.bessel_inverse_integral(b), t / 0.7)
    w = sle.driving_sle82(b, c=-1.0).values
    assert np.allclose(w, -1.0 + math.sqrt(8) * 0.7 - t / (math.sqrt(2) * 0.7))


def test_counterclockwise_driving_starts_at_zero():
    d = sle.counterclockwise_sle82_driving(1e-3, 0.1, rng=3, n_paths=5)
    assert np.allclose(d.values[:, 0], 0.0)


def test_integral_from_zero_start():
    # X_s = a sqrt(s): the integral of 1/X over [0, t] is 2 sqrt(t) / a
    a, dt = 1.3, 1e-4
    t = grid(dt, 1.0)
    got = sle.bessel_inverse_integral(sle.BesselPath(t, a * np.sqrt(t)))
    assert got[1] == pytest.approx(2 * math.sqrt(dt) / a, rel=1e-12)
    assert got[-1] == pytest.approx(2 / a, rel=2e-3)


def test_besq_positive_and_mean():
    b = sle.sample_bessel2(0.0, 0.01, 1.0, rng=1, n_paths=200)
    assert np.all(b.values >= 0) and np.all(b.values[:, 0] == 0)
    assert besq_mean_check(n_paths=4000, seed=2).passed


def test_zero_driving_is_vertical_slit():
    assert zero_driving_error() < 1e-10


def test_capacity_of_vertical_slit():
    t = grid(1e-3, 1.0)
    pts = sle.loewner_trace(sle.DrivingFunction(t, np.zeros_like(t))).points
    assert np.allclose(sle.half_plane_capacity(pts), t, atol=1e-10)


def test_capacity_tracks_loewner_time():
    t = grid(1e-4, 1.0)
    trace = sle.loewner_trace(sle.DrivingFunction(t, np.sin(3 * t)))
    cap = sle.half_plane_capacity(trace.points[::10])
    assert cap[-1] == pytest.approx(1.0, rel=0.02)


def test_trace_converges_under_refinement():
    ends = []
    for dt in (4e-3, 1e-3, 2.5e-4):
        t = grid(dt, 1.0)
        ends.append(sle.loewner_trace(sle.DrivingFunction(t, t.copy())).points[-1])
    assert abs(ends[2] - ends[1]) < abs(ends[1] - ends[0])
    assert abs(ends[2] - ends[1]) < 1e-2


def test_trace_concatenation():
    # the tip after n steps is the tip of the shifted driving, pulled back through the first m steps
    rng = np.random.default_rng(0)
    dt, n, m = 1e-3, 400, 150
    w = np.concatenate([[0.0], np.cumsum(rng.normal(scale=math.sqrt(8 * dt), size=n))])
    s = 2 * math.sqrt(dt)
    z = sle._trace_point(w[m:], n - m, s)
    for k in range(m, 0, -1):
        z = sle._slit_inverse(z, w[k], s)
    assert z == pytest.approx(sle._trace_point(w, n, s), abs=1e-12)


def test_to_disk_normalization():
    assert sle.to_disk(np.array([0j, 1j]))[0] == pytest.approx(1)
    assert abs(sle.to_disk(np.array([1j]))[0]) < 1e-15
    assert sle.to_disk(np.array([-1 + 0j]))[0] == pytest.approx(-1j)


def test_probe_radius_at_least_one_hits_at_start():
    rec = sle.first_entry(np.array([1 + 0j, 0.5 + 0j]), 1.0)
    assert rec.index == 0
    t = grid(1e-3, 0.1)
    assert sle.entry_record(sle.DrivingFunction(t, np.zeros_like(t)), 1.5).index == 0


def test_zero_driving_entry_time():
    # phi(2 i sqrt t) = (1 - y)/(1 + y) with y = 2 sqrt t drops below 1/2 once t > 1/36
    dt = 1e-4
    t = grid(dt, 0.2)
    rec = sle.entry_record(sle.DrivingFunction(t, np.zeros_like(t)), 0.5)
    assert rec.capacity == pytest.approx(1 / 36, abs=dt)
    assert rec.angle == pytest.approx(0.0, abs=1e-9)


def test_probe_not_hit():
    t = grid(1e-3, 0.01)
    with pytest.raises(ProbeNotHit):
        sle.entry_record(sle.DrivingFunction(t, np.zeros_like(t)), 0.1)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sle82_trace_stays_in_half_plane(seed):
    d = sle.counterclockwise_sle82_driving(2e-3, 1.0, rng=seed)
    pts = sle.loewner_trace(d).points
    assert np.all(pts.imag >= -1e-12)
    assert np.all(np.abs(sle.to_disk(pts)) <= 1 + 1e-9)


def test_sle82_angles_shape():
    ang = sle.sle82_entry_angles(8, 0.5, rng=4)
    assert ang.shape == (8,) and np.all(np.abs(ang) <= math.pi)


def test_trace_restriction_to_first_half():
    d = sle.counterclockwise_sle82_driving(1e-3, 1.0, rng=5)
    full = sle.loewner_trace(d).points
    half = sle.loewner_trace(sle.DrivingFunction(d.times[:501], d.values[:501])).points
    assert np.allclose(full[:501], half, atol=1e-8)
