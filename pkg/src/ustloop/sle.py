"""Loewner chains driven by Bessel functionals: SLE_8 and counterclockwise SLE_8(2).

The force point of SLE_8(2) sits at ``c`` on the real line; with X a Bessel(2)
process the driving function is W = c + sqrt(8) X - int 1/(sqrt(2) X) ds, and
W - V = sqrt(8) X where V is the force point's image under the Loewner flow.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import NumericalBlowup, ProbeNotHit

SQRT8 = math.sqrt(8.0)


@dataclass(frozen=True, eq=False)
class BesselPath:
    times: np.ndarray
    values: np.ndarray  # shape (n_times,) or (n_paths, n_times)
    dimension: int = 2

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


@dataclass(frozen=True, eq=False)
class DrivingFunction:
    times: np.ndarray
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class TracePath:
    points: np.ndarray
    capacities: np.ndarray


def sample_bessel2(
    x0: float,
    dt: float,
    horizon: float,
    rng: np.random.Generator | int | None = None,
    n_paths: int | None = None,
) -> BesselPath:
    """Bessel(2) paths from exact squared-Bessel transitions.

    Y = X^2 moves by Y' = dt * chi'^2_2(Y / dt), a non-central chi-square with two
    degrees of freedom, so no discretization bias enters the marginals.
    """
    if dt <= 0 or horizon <= 0 or x0 < 0:
        raise ValueError("need dt > 0, horizon > 0 and x0 >= 0")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    n_steps = int(round(horizon / dt))
    times = np.arange(n_steps + 1) * dt
    shape = (1 if n_paths is None else n_paths,)
    y = np.empty(shape + (n_steps + 1,))
    y[:, 0] = x0 * x0
    for k in range(n_steps):
        y[:, k + 1] = dt * rng.noncentral_chisquare(2.0, y[:, k] / dt)
    x = np.sqrt(y)
    return BesselPath(times, x[0] if n_paths is None else x)


def bessel_inverse_integral(bessel: BesselPath) -> np.ndarray:
    """Running integral of 1/X by the trapezoid rule.

    When the path starts at 0, the first interval uses X_s ~ X_dt sqrt(s/dt),
    whose integral is 2 dt / X_dt.
    """
    x = np.atleast_2d(bessel.values)
    dt = bessel.dt
    inv = 1.0 / x[:, 1:]
    steps = np.empty_like(inv)
    with np.errstate(divide="ignore"):
        inv0 = 1.0 / x[:, 0]
    first = np.where(x[:, 0] > 0, 0.5 * dt * (inv0 + inv[:, 0]), 2.0 * dt * inv[:, 0])
    steps[:, 0] = first
    steps[:, 1:] = 0.5 * dt * (inv[:, :-1] + inv[:, 1:])
    out = np.concatenate([np.zeros((x.shape[0], 1)), np.cumsum(steps, axis=1)], axis=1)
    return out[0] if np.ndim(bessel.values) == 1 else out


def driving_sle82(bessel: BesselPath, c: float = 0.0) -> DrivingFunction:
    w = c + SQRT8 * bessel.values - bessel_inverse_integral(bessel) / math.sqrt(2.0)
    return DrivingFunction(bessel.times, w)


def counterclockwise_sle82_driving(
    dt: float, horizon: float, rng=None, n_paths: int | None = None, force_point: float = -1.0
) -> DrivingFunction:
    """Driving function started at 0 with the force point at ``force_point`` < 0."""
    if force_point >= 0:
        raise ValueError("force point must lie left of the origin")
    bessel = sample_bessel2(-force_point / SQRT8, dt, horizon, rng, n_paths)
    return driving_sle82(bessel, force_point)


@numba.njit(cache=True)
def _slit_inverse(z, w, two_sqrt_dt):
    # inverse of the Loewner map for one step of constant driving w: a vertical slit
    return w + cmath.sqrt(z - w - two_sqrt_dt) * cmath.sqrt(z - w + two_sqrt_dt)


@numba.njit(cache=True)
def _trace_point(w, n, two_sqrt_dt):
    """Tip after n steps: compose the inverse slit maps of steps n..1 applied to W_n."""
    z = complex(w[n], 0.0)
    for k in range(n, 0, -1):
        z = _slit_inverse(z, w[k], two_sqrt_dt)
    return z


@numba.njit(cache=True)
def _trace(w, two_sqrt_dt):
    n = w.shape[0]
    out = np.empty(n, dtype=np.complex128)
    out[0] = complex(w[0], 0.0)
    for m in range(1, n):
        out[m] = _trace_point(w, m, two_sqrt_dt)
    return out


@numba.njit(cache=True)
def _trace_subset(w, idx, two_sqrt_dt):
    out = np.empty(idx.shape[0], dtype=np.complex128)
    for j in range(idx.shape[0]):
        out[j] = complex(w[0], 0.0) if idx[j] == 0 else _trace_point(w, idx[j], two_sqrt_dt)
    return out


def loewner_trace(driving: DrivingFunction) -> TracePath:
    """Trace at every grid time by backward composition of slit maps.

    On step k the driving function is frozen at its right-end value W_k, and the
    inverse Loewner map for that step is exact: z -> W_k + sqrt((z - W_k)^2 - 4 dt).
    """
    t = np.asarray(driving.times, dtype=float)
    w = np.asarray(driving.values, dtype=float)
    if w.ndim != 1:
        raise ValueError("loewner_trace takes a single driving function")
    dt = t[1] - t[0]
    if not np.allclose(np.diff(t), dt, rtol=1e-9, atol=1e-15):
        raise ValueError("time grid must be uniform")
    pts = _trace(w, 2.0 * math.sqrt(dt))
    if np.any(pts.imag < -1e-12):
        raise NumericalBlowup("trace left the upper half-plane; reduce dt")
    return TracePath(pts, t.copy())


def half_plane_capacity(points: np.ndarray) -> np.ndarray:
    """Capacity of the hull generated by a polygonal trace, by vertical-slit zipping.

    Each new point is mapped by the maps of the previous points and then removed
    with a vertical slit map, contributing (Im w)^2 / 4.
    """
    z = np.asarray(points, dtype=complex).copy()
    cap = np.zeros(len(z))
    total = 0.0
    for k in range(1, len(z)):
        a, b = z[k].real, z[k].imag
        total += b * b / 4.0
        cap[k] = total
        rest = z[k + 1:] - a
        z[k + 1:] = a + np.sqrt(rest - 1j * b) * np.sqrt(rest + 1j * b)
    return cap


def to_disk(z: np.ndarray) -> np.ndarray:
    """Möbius map of the upper half-plane onto the unit disk: 0 -> 1, i -> 0, inf -> -1."""
    z = np.asarray(z, dtype=complex)
    return (1j - z) / (1j + z)


@dataclass(frozen=True)
class ProbeRecord:
    angle: float
    capacity: float
    winding_sign: int
    index: int


def first_entry(disk_points: np.ndarray, rho: float, times: np.ndarray | None = None) -> ProbeRecord:
    """First point of a disk curve inside the circle of radius ``rho``."""
    w = np.asarray(disk_points, dtype=complex)
    inside = np.nonzero(np.abs(w) < rho)[0] if rho < 1 else np.array([0])
    if len(inside) == 0:
        raise ProbeNotHit(f"curve never enters the circle of radius {rho}")
    k = int(inside[0])
    with np.errstate(invalid="ignore", divide="ignore"):
        steps = np.angle(w[1:k + 1] / w[:k]) if k > 0 else np.zeros(0)
    turn = float(np.nansum(steps))
    sign = 0 if abs(turn) < 1e-12 else (1 if turn > 0 else -1)
    cap = float(times[k]) if times is not None else float(k)
    return ProbeRecord(float(np.angle(w[k])), cap, sign, k)


def sle8_observables(trace: TracePath, rho: float, conformal_map=to_disk) -> ProbeRecord:
    return first_entry(conformal_map(trace.points), rho, trace.capacities)


@numba.njit(cache=True)
def _inside(w, m, two_sqrt_dt, rho):
    z = _trace_point(w, m, two_sqrt_dt)
    return abs((1j - z) / (1j + z)) < rho


@numba.njit(cache=True)
def _entry_scan(w, two_sqrt_dt, rho, stride):
    """Index of the first trace point mapped inside |phi| < rho, or -1.

    Points are tested every ``stride`` steps, then the last stride is rescanned,
    so only excursions into the probe shorter than ``stride`` steps can be missed.
    """
    n = w.shape[0]
    m = stride
    while True:
        top = min(m, n - 1)
        if _inside(w, top, two_sqrt_dt, rho):
            for k in range(max(1, top - stride + 1), top + 1):
                if _inside(w, k, two_sqrt_dt, rho):
                    return k
        if top == n - 1:
            return -1
        m += stride


def entry_record(driving: DrivingFunction, rho: float, stride: int = 1) -> ProbeRecord:
    """First entry of the SLE trace into the probe, building the trace only up to it."""
    w = np.asarray(driving.values, dtype=float)
    dt = float(driving.times[1] - driving.times[0])
    if rho >= 1:
        return first_entry(to_disk(np.array([complex(w[0])])), rho, driving.times)
    m = _entry_scan(w, 2.0 * math.sqrt(dt), rho, stride)
    if m < 0:
        raise ProbeNotHit("trace did not reach the probe before the horizon")
    # winding is read off a strided subsequence ending at the entry point
    idx = np.append(np.arange(0, m, stride), m)
    pts = _trace_subset(w, idx, 2.0 * math.sqrt(dt))
    rec = first_entry(to_disk(pts), rho, driving.times[idx])
    return ProbeRecord(rec.angle, rec.capacity, rec.winding_sign, m)


def sle82_entry_angles(
    n: int, rho: float, dt: float = 2e-3, horizon: float = 8.0, rng=None, force_point: float = -1.0,
    stride: int = 1,
) -> np.ndarray:
    """Entry angles of counterclockwise SLE_8(2) traces into the probe circle."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    out = np.empty(n)
    k = 0
    while k < n:
        batch = min(256, n - k)
        drive = counterclockwise_sle82_driving(dt, horizon, rng, batch, force_point)
        for row in drive.values:
            try:
                rec = entry_record(DrivingFunction(drive.times, row), rho, stride)
            except ProbeNotHit:
                continue
            out[k] = rec.angle
            k += 1
            if k == n:
                break
    return out
