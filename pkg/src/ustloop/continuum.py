"""Continuum reference values on round annuli.

Harmonic extension between concentric circles acts diagonally on Fourier modes,
so Fredholm determinants of compositions of such operators reduce to products
over modes.  Non-concentric data fall back on quadrature (Nyström) or on a
fine-mesh discrete computation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import LoopNotSeparated, QuadratureUnstable, RadiusOutOfRange
from .grid import AnnulusSpec


@dataclass(frozen=True)
class ModeMultiplier:
    mode: int
    value: float


@dataclass(frozen=True)
class ContinuumFredholm:
    value: float
    modes_used: int
    tail: float = 0.0


def _log_ratio_profile(n: int, x: float, y: float) -> float:
    """s(x)/s(y) with s(t) = sinh(|n| t) (or t for n = 0), for 0 <= x <= y."""
    if y <= 0:
        raise RadiusOutOfRange("degenerate radial interval")
    n = abs(n)
    if n == 0:
        return x / y
    # sinh(nx)/sinh(ny) = exp(n(x-y)) (1 - exp(-2nx)) / (1 - exp(-2ny))
    return math.exp(n * (x - y)) * (-math.expm1(-2 * n * x)) / (-math.expm1(-2 * n * y))


def radial_profile(n: int, r: float, r_from: float, r_zero: float) -> float:
    """Mode-n harmonic profile equal to 1 at ``r_from`` and 0 at ``r_zero``, evaluated at r."""
    return _log_ratio_profile(n, abs(math.log(r / r_zero)), abs(math.log(r_from / r_zero)))


def neumann_profile(n: int, r: float, r_from: float, r_free: float) -> float:
    """Mode-n profile equal to 1 at ``r_from`` with zero normal derivative at ``r_free``."""
    n = abs(n)
    if n == 0:
        return 1.0
    x, y = abs(math.log(r_free / r)), abs(math.log(r_free / r_from))
    # cosh(nx)/cosh(ny)
    return math.exp(n * (x - y)) * (1 + math.exp(-2 * n * x)) / (1 + math.exp(-2 * n * y))


def mode_multiplier(annulus: AnnulusSpec, a: float, b: float, n: int) -> ModeMultiplier:
    """Coefficient at radius b of the extension of e^{in theta} from radius a.

    The extension lives between radius a and the boundary circle on b's side,
    with Dirichlet data there.
    """
    lo, hi = annulus.inner_radius, annulus.outer_radius
    if not (lo < a < hi and lo < b < hi):
        raise RadiusOutOfRange(f"radii must lie strictly inside ({lo}, {hi})")
    if a == b:
        return ModeMultiplier(n, 1.0)
    zero = hi if b > a else lo
    return ModeMultiplier(n, radial_profile(n, b, a, zero))


def _multiplier_or_zero(annulus: AnnulusSpec, a: float, b: float, n: int) -> float:
    """Like mode_multiplier but a target on the boundary circle gives 0."""
    if b <= annulus.inner_radius or b >= annulus.outer_radius:
        return 0.0
    return mode_multiplier(annulus, a, b, n).value


def concentric_blocks(annulus: AnnulusSpec, c: float, d: tuple[float, float], n: int):
    """Mode-n blocks of H^{c->d} (2x1) and H^{d->c} (1x2)."""
    d1, d2 = sorted(d)
    if not (annulus.inner_radius <= d1 < c < d2 <= annulus.outer_radius):
        raise RadiusOutOfRange("d radii must flank c inside the closed annulus")
    h_cd = np.array([_multiplier_or_zero(annulus, c, d1, n), _multiplier_or_zero(annulus, c, d2, n)])
    # from d = {d1, d2} into the band between them, read at c
    h_dc = np.array([radial_profile(n, c, d1, d2), radial_profile(n, c, d2, d1)])
    return h_cd, h_dc


def continuum_fredholm_concentric(
    annulus: AnnulusSpec,
    c_radius: float,
    d_radii: tuple[float, float],
    n_modes: int | None = None,
    tol: float = 1e-12,
) -> ContinuumFredholm:
    """det_F(Id - H^{c->d} H^{d->c}) on a round annulus as a product over modes.

    Each mode block is rank one, so its determinant is 1 - trace.  Modes +-n
    contribute equally.  With ``n_modes=None`` the product runs until the next
    block changes the log-value by less than ``tol``.
    """
    log_val = 0.0
    n = 0
    tail = 0.0
    limit = n_modes if n_modes is not None else 100_000
    while n <= limit:
        h_cd, h_dc = concentric_blocks(annulus, c_radius, d_radii, n)
        t = float(h_cd @ h_dc)
        term = math.log1p(-t) * (1 if n == 0 else 2)
        log_val += term
        if n_modes is None and n > 0 and abs(term) < tol:
            tail = abs(term)
            break
        n += 1
    return ContinuumFredholm(math.exp(log_val), n, tail)


def nystrom_fredholm(
    kernel: Callable[[np.ndarray, np.ndarray], np.ndarray] | np.ndarray,
    nodes: np.ndarray | None = None,
    weights: np.ndarray | None = None,
) -> ContinuumFredholm:
    """det(Id - K) for (Kf)(x) = integral of k(x, y) f(y) against the quadrature weights.

    ``kernel`` is either a callable k(x_i, y_j) evaluated on the node grid or a
    precomputed matrix of k at the nodes.
    """
    w = np.asarray(weights, dtype=float)
    if callable(kernel):
        x = np.asarray(nodes)
        kmat = kernel(x[:, None], x[None, :])
    else:
        kmat = np.asarray(kernel, dtype=float)
    if kmat.size == 0:
        return ContinuumFredholm(1.0, 0)
    sw = np.sqrt(w)
    a = sw[:, None] * kmat * sw[None, :]
    sign, val = np.linalg.slogdet(np.eye(len(w)) - a)
    if sign <= 0:
        raise QuadratureUnstable("Id - K is not positive at this resolution")
    return ContinuumFredholm(float(math.exp(val)), len(w))


def circle_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoid nodes (angles) and weights for the normalized measure d theta / 2 pi."""
    theta = 2 * np.pi * np.arange(n) / n
    return theta, np.full(n, 1.0 / n)


def _mode_kernel(coeffs: np.ndarray, dtheta: np.ndarray) -> np.ndarray:
    """sum_n coeffs[|n|] e^{in dtheta} over n in [-N, N]."""
    n = np.arange(1, len(coeffs))
    out = np.full(dtheta.shape, coeffs[0])
    if len(n):
        out = out + 2 * np.tensordot(np.cos(dtheta[..., None] * n), coeffs[1:], axes=([-1], [0]))
    return out


def _modes_until(fn: Callable[[int], float], tol: float = 1e-17, cap: int = 10_000) -> np.ndarray:
    vals = [fn(0)]
    n = 1
    while n < cap:
        v = fn(n)
        vals.append(v)
        if abs(v) < tol:
            break
        n += 1
    return np.array(vals)


def concentric_nystrom(
    annulus: AnnulusSpec,
    c_radius: float,
    d_radii: tuple[float, float],
    nodes_per_circle: int = 64,
    check: bool = True,
) -> ContinuumFredholm:
    """Nyström evaluation of det_F(Id - H^{c->d} H^{d->c}) on the two d circles.

    The kernel on d x d is assembled from its Fourier series; the node count is
    doubled once and the two values compared.
    """
    blocks = [concentric_blocks(annulus, c_radius, d_radii, 0)]
    while True:
        n = len(blocks)
        h_cd, h_dc = concentric_blocks(annulus, c_radius, d_radii, n)
        blocks.append((h_cd, h_dc))
        if np.abs(np.outer(h_cd, h_dc)).max() < 1e-17 or n > 10_000:
            break
    # coefficient of e^{in(x-y)} from circle j to circle i: h_cd[i] h_dc[j]
    coeff = np.array([np.outer(a, b) for a, b in blocks])  # (N, 2, 2)

    def evaluate(m: int) -> float:
        theta, w = circle_nodes(m)
        dth = theta[:, None] - theta[None, :]
        big = np.zeros((2 * m, 2 * m))
        for i in range(2):
            for j in range(2):
                big[i * m:(i + 1) * m, j * m:(j + 1) * m] = _mode_kernel(coeff[:, i, j], dth)
        return nystrom_fredholm(big, weights=np.concatenate([w, w])).value

    v = evaluate(nodes_per_circle)
    if check:
        v2 = evaluate(2 * nodes_per_circle)
        if abs(v2 - v) > 1e-4:
            raise QuadratureUnstable(f"doubling nodes moved the value by {abs(v2 - v):.2e}")
        v = v2
    return ContinuumFredholm(v, nodes_per_circle * (2 if check else 1))


# -- cocycle ----------------------------------------------------------------


def _is_centred_circle(loop: Sequence[complex], centre: complex, rtol: float = 1e-9):
    r = np.abs(np.asarray(loop) - centre)
    if r.max() - r.min() <= rtol * r.max():
        return float(r.mean())
    return None


def cocycle_M(
    annulus: AnnulusSpec,
    subannulus: AnnulusSpec,
    loop: Sequence[complex],
    d_radius: float | None = None,
    mesh: float = 1 / 64,
    nodes: int = 64,
) -> float:
    """M(A, A'; loop) for A' obtained from A by enlarging the inner circle.

    The removed set is the ring between the two inner radii.  Sign convention:
    exp(-M) is the density of the loop measure of A' against that of A, so

        M = log det_F(Id - H H)_{A minus loop} - log det_F(Id - H H)_A

    with the operators running between the boundary of the removed ring and a
    circle ``d`` separating it from the loop.  Circular loops centred on the
    annulus use Fourier kernels and Nyström quadrature; other loops are evaluated
    by the discrete four-Laplacian identity at mesh ``mesh``.
    """
    if abs(subannulus.center - annulus.center) > 1e-12 or subannulus.outer_radius != annulus.outer_radius:
        raise ValueError("subannulus must share centre and outer circle with the annulus")
    r1, r2, R = annulus.inner_radius, subannulus.inner_radius, annulus.outer_radius
    if r2 < r1:
        raise ValueError("subannulus must be contained in the annulus")
    loop = [complex(z) for z in loop]
    radii = np.abs(np.asarray(loop) - annulus.center)
    if radii.min() <= r2 or radii.max() >= R:
        raise LoopNotSeparated("loop must lie inside the subannulus")
    if r2 == r1:
        return 0.0
    rd = 0.5 * (r2 + radii.min()) if d_radius is None else d_radius
    if not (r2 < rd < radii.min()):
        raise LoopNotSeparated("d must separate the removed ring from the loop")
    rho = _is_centred_circle(loop[:-1] if loop[0] == loop[-1] else loop, annulus.center)
    if rho is None:
        return _cocycle_discrete(annulus, subannulus, loop, mesh)

    def h_out(n, free):
        return neumann_profile(n, rd, r2, rho) if free else radial_profile(n, rd, r2, R)

    h_in = _modes_until(lambda n: radial_profile(n, r2, rd, r1))

    def det(free: bool) -> float:
        coeffs = np.array([h_out(n, free) for n in range(len(h_in))]) * h_in
        theta, w = circle_nodes(nodes)
        kmat = _mode_kernel(coeffs, theta[:, None] - theta[None, :])
        v = nystrom_fredholm(kmat, weights=w).value
        theta2, w2 = circle_nodes(2 * nodes)
        v2 = nystrom_fredholm(_mode_kernel(coeffs, theta2[:, None] - theta2[None, :]), weights=w2).value
        if abs(v2 - v) > 1e-4:
            raise QuadratureUnstable("cocycle kernel under-resolved")
        return v2

    return math.log(det(True)) - math.log(det(False))


def cocycle_M_modes(annulus: AnnulusSpec, subannulus: AnnulusSpec, rho: float, d_radius: float) -> float:
    """Mode-product version of :func:`cocycle_M` for a centred circular loop of radius rho."""
    r1, r2, R = annulus.inner_radius, subannulus.inner_radius, annulus.outer_radius
    total = 0.0
    n = 0
    while True:
        b = radial_profile(n, r2, d_radius, r1)
        t_free = neumann_profile(n, d_radius, r2, rho) * b
        t_wired = radial_profile(n, d_radius, r2, R) * b
        term = (math.log1p(-t_free) - math.log1p(-t_wired)) * (1 if n == 0 else 2)
        total += term
        if n > 0 and abs(term) < 1e-16:
            return total
        n += 1


def _cocycle_discrete(annulus: AnnulusSpec, subannulus: AnnulusSpec, loop: list, mesh: float) -> float:
    from .determinants import domain_log_det, loop_free_domain
    from .grid import _point_in_polygon, approximate_annulus
    from .harmonic import cut_domain

    c = annulus.center
    r_mark = 0.5 * (subannulus.inner_radius + annulus.outer_radius)
    A = approximate_annulus(annulus, mesh, c + r_mark)
    pts = A.points(A.interior)
    H = frozenset(v for v, z in zip(A.interior, pts) if abs(z - c) <= subannulus.inner_radius)
    poly = np.asarray(loop + ([loop[0]] if loop[0] != loop[-1] else []))
    verts = sorted(A.vertices)
    inside = dict(zip(verts, _point_in_polygon(A.points(verts), poly)))
    crossed = frozenset(e for e in A.edges if inside[e[0]] != inside[e[1]])
    if any(v in H for e in crossed for v in e):
        raise LoopNotSeparated("loop comes within a mesh step of the removed set")
    A_l = loop_free_domain(A, crossed)
    ld = domain_log_det
    log_rn = ld(A) + ld(cut_domain(A_l, H)) - ld(cut_domain(A, H)) - ld(A_l)
    return -log_rn
