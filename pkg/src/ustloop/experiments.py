"""Experiment orchestration.

Every experiment is a pure function of its config: it returns per-replicate
records (written as JSONL), report rows and optional aggregate tables.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import sle
from .config import EXPERIMENTS, ExperimentConfig, GeometrySpec
from .continuum import continuum_fredholm_concentric
from .determinants import (
    composite_matrix,
    count_spanning_trees,
    det_id_minus_HH,
    fredholm_series,
    loop_law,
    ratio_det_fredholm,
    ratio_det_laplacians,
    restriction_cocycle,
    rn_derivative,
)
from .errors import ProbeNotHit, UstLoopError
from .grid import (
    AnnulusSpec,
    LatticeDomain,
    approximate_annulus,
    approximate_cut,
    approximate_disk,
    approximate_region,
    circle_polyline,
    square_annulus,
)
from .harmonic import cut_domain, extension_operator
from .spanning import (
    dual_structure,
    exploration_path,
    hitting_time,
    loop_from_mask,
    plain_graph,
    sample_loop_masks,
    spawn_seed,
    wilson_sample,
)
from .stats import (
    StatReport,
    chi2_report,
    ks_report,
    rel_err,
    rel_err_report,
    sigma_report,
)

MODULE_IDS = {name: k for k, name in enumerate(EXPERIMENTS)}


@dataclass
class ExperimentResult:
    records: list[dict]
    reports: list[StatReport]
    tables: dict[str, list[dict]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports if not r.informational)

    @property
    def failures(self) -> list[str]:
        return [r.name for r in self.reports if not r.passed and not r.informational]


def seeds_for(master_seed: int, experiment: str, n: int, stream: int = 0) -> list[int]:
    module = MODULE_IDS[experiment]
    return [spawn_seed(master_seed, module, stream, r) for r in range(n)]


def parallel_map(fn, items: list, workers: int = 1) -> list:
    """Order-preserving map, in worker processes when ``workers > 1``."""
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _chunks(seq: list, k: int) -> list[list]:
    size = max(1, math.ceil(len(seq) / k))
    return [seq[i:i + size] for i in range(0, len(seq), size)]


def annulus_of(geom: GeometrySpec) -> AnnulusSpec:
    return AnnulusSpec(complex(*geom.center), geom.inner_radius, geom.outer_radius)


def build_domain(geom: GeometrySpec, mesh: float) -> LatticeDomain:
    if geom.kind == "square-annulus":
        return square_annulus(geom.size, geom.hole, 1.0)
    centre = complex(*geom.center)
    if geom.kind == "disk":
        return approximate_disk(centre, geom.outer_radius, mesh, centre,
                                centre + geom.outer_radius, (1.5 * math.pi, 2 * math.pi))
    spec = annulus_of(geom)
    mid = centre + 0.5 * (geom.inner_radius + geom.outer_radius)
    return approximate_annulus(spec, mesh, mid)


@lru_cache(maxsize=4)
def _cached_domain(geom_json: str, mesh: float) -> LatticeDomain:
    return build_domain(GeometrySpec.model_validate_json(geom_json), mesh)


# -- loop observables ---------------------------------------------------------


def loop_radii(domain: LatticeDomain, masks: np.ndarray, centre: complex = 0j) -> np.ndarray:
    """(min |z - centre|, max |z - centre|) over the faces of each sampled loop."""
    ds = dual_structure(domain)
    fc = (np.asarray(ds.faces, dtype=float) + 0.5) * domain.mesh
    fr = np.hypot(fc[:, 0] - centre.real, fc[:, 1] - centre.imag)
    ef = np.asarray(ds.edge_faces)
    out = np.empty((len(masks), 2))
    for k, m in enumerate(masks):
        r = fr[ef[m].ravel()]
        out[k] = r.min(), r.max()
    return out


def _radii_chunk(args) -> np.ndarray:
    geom_json, mesh, seeds, centre = args
    domain = _cached_domain(geom_json, mesh)
    return loop_radii(domain, sample_loop_masks(domain, seeds), centre)


def sampled_loop_radii(domain_or_geom, mesh: float, seeds: list[int], centre: complex, workers: int = 1):
    if isinstance(domain_or_geom, LatticeDomain):
        return loop_radii(domain_or_geom, sample_loop_masks(domain_or_geom, seeds), centre)
    geom_json = domain_or_geom.model_dump_json()
    parts = parallel_map(_radii_chunk, [(geom_json, mesh, c, centre) for c in _chunks(seeds, workers)], workers)
    return np.concatenate(parts)


def perturbed_annulus(annulus: AnnulusSpec, mesh: float, cut_fraction: float = 0.375) -> LatticeDomain:
    """Annulus with the outer part beyond ``Re z > centre + cut_fraction * R`` removed."""
    c, R = annulus.center, annulus.outer_radius
    x_cut = c.real + cut_fraction * R
    inside = lambda z: annulus.contains(z) & (z.real < x_cut)
    mid = c - 0.5 * (annulus.inner_radius + R)
    return approximate_region(inside, (c.real - R, c.real + R, c.imag - R, c.imag + R), mesh, mid)


def inversion_symmetry_test(
    annulus: AnnulusSpec,
    mesh: float,
    replicates: int,
    master_seed: int = 0,
    alpha: float = 0.01,
    touch_cap: float = 0.3,
    domain: LatticeDomain | None = None,
    name: str = "inversion-ks",
    stream: int = 0,
    workers: int = 1,
) -> tuple[list[StatReport], np.ndarray]:
    """KS test of m = min|z| against r/M with M = max|z| over sampled loops.

    Both observables are floored at 1 + ``touch_cap`` (in units of the inner
    radius) so that loops touching either boundary at lattice scale fall in one
    shared atom; the uncapped comparison is reported alongside as informational.
    """
    r_in, r_out = annulus.inner_radius, annulus.outer_radius
    seeds = seeds_for(master_seed, "inversion-symmetry", replicates, stream)
    if domain is None:
        domain = approximate_annulus(annulus, mesh, annulus.center + 0.5 * (r_in + r_out))
    radii = sampled_loop_radii(domain, mesh, seeds, annulus.center, workers)
    m = radii[:, 0] / r_in
    inv = r_out / radii[:, 1]
    floor = 1.0 + touch_cap
    capped = ks_report(name, np.maximum(m, floor), np.maximum(inv, floor), alpha)
    raw = ks_report(name + "-uncapped", m, inv, alpha, informational=True)
    return [capped, raw], radii


def inversion_negative_control(
    annulus: AnnulusSpec, mesh: float, replicates: int, master_seed: int = 0, alpha: float = 0.01,
    touch_cap: float = 0.3, workers: int = 1,
) -> StatReport:
    """The same test on a domain without inversion symmetry; it passes when KS rejects."""
    domain = perturbed_annulus(annulus, mesh)
    (rep, _), _ = inversion_symmetry_test(annulus, mesh, replicates, master_seed, alpha, touch_cap,
                                         domain, "inversion-negative-control", stream=1, workers=workers)
    return StatReport(rep.name, "ks", rep.statistic, rep.value, alpha, rep.value <= alpha, rep.n)


# -- exploration observables -----------------------------------------------------


def _stop_index(path, cuts, epsilon: float) -> int:
    hits = [hitting_time(path, cut, epsilon) for cut in cuts]
    k = min(hits)
    return len(path) - 1 if math.isinf(k) else int(k)


def exploration_observables(path, stop: int, centre: complex) -> tuple[float, float, float]:
    """(hull size, endpoint angle about ``centre``, step count) of the stopped path."""
    hull = path.hull(stop + 1)
    end = path.positions[stop] - centre
    return float(len(hull.vertices)), float(math.atan2(end.imag, end.real)), float(stop)


@dataclass(frozen=True)
class RNSetup:
    domain: LatticeDomain
    c: object
    d1: object
    d2: object
    epsilon: float

    @property
    def centre(self) -> complex:
        n = max(i for i, _ in self.domain.vertices)
        return complex(n / 2, n / 2) * self.domain.mesh


def default_rn_setup(size: int = 24, hole: int = 8, epsilon: float = 2.5) -> RNSetup:
    """Square annulus with c a radial cut on the right and d two radial cuts flanking it."""
    domain = square_annulus(size, hole)
    inner_edge = (size + hole) / 2
    mid = size / 2

    def radial(y):
        return approximate_cut(domain, [complex(size, y), complex(inner_edge, y)], "left")

    return RNSetup(domain, radial(mid), radial(mid - hole / 2 + 1), radial(mid + hole / 2 - 1), epsilon)


def rn_sample(setup: RNSetup, seed: int, reference: bool) -> dict:
    """One stopped exploration: in A minus c (reference, weighted) or in A (direct)."""
    A = setup.domain
    dom = cut_domain(A, setup.c.vertex_set) if reference else A
    tree = wilson_sample(dom, seed)
    path = exploration_path(tree, dom, A.marked_boundary)
    stop = _stop_index(path, (setup.c, setup.d1, setup.d2), setup.epsilon)
    obs = exploration_observables(path, stop, setup.centre)
    rec = {"seed": seed, "reference": reference, "stop": stop,
           "hull_size": obs[0], "end_angle": obs[1], "steps": obs[2]}
    if reference:
        tree_w, harm_w = rn_derivative(A, path.hull(stop + 1), setup.c, setup.d1, setup.d2)
        rec.update(weight=harm_w, tree_ratio=tree_w)
    return rec


def rn_reweighting_test(
    setup: RNSetup, replicates: int, master_seed: int = 0, n_sigma: float = 3.0, rn_rel: float = 1e-6
) -> tuple[list[StatReport], list[dict]]:
    """Weighted reference expectations against direct sampling, for three observables."""
    ref_seeds = seeds_for(master_seed, "rn-derivative", replicates, 0)
    dir_seeds = seeds_for(master_seed, "rn-derivative", replicates, 1)
    ref = [rn_sample(setup, s, True) for s in ref_seeds]
    direct = [rn_sample(setup, s, False) for s in dir_seeds]
    w = np.array([r["weight"] for r in ref])
    n = len(ref)
    reports = []
    for key in ("hull_size", "end_angle", "steps"):
        f_ref = np.array([r[key] for r in ref]) * w
        f_dir = np.array([r[key] for r in direct])
        se_ref = f_ref.std(ddof=1) / math.sqrt(n) if n > 1 else 0.0
        se_dir = f_dir.std(ddof=1) / math.sqrt(n) if n > 1 else 0.0
        reports.append(sigma_report(f"rn-reweight-{key}", f_ref.mean(), se_ref, f_dir.mean(), se_dir,
                                    n_sigma, 2 * n))
    worst = max((rel_err(r["weight"], r["tree_ratio"]) for r in ref), default=0.0)
    reports.append(StatReport("rn-weight-vs-tree-ratio", "rel_err", worst, worst, rn_rel, worst <= rn_rel, n))
    positive = bool(np.all(w > 0) and np.all(np.isfinite(w)))
    reports.append(StatReport("rn-weights-positive", "rel_err", float(w.min(initial=1.0)),
                              0.0 if positive else 1.0, 0.0, positive, n))
    return reports, ref + direct


# -- SLE comparison ---------------------------------------------------------------


def ust_disk_entry_angles(mesh: float, seeds: list[int], rho: float) -> list[dict]:
    """Probe-entry records of UST explorations in the unit disk.

    The boundary is wired on the counterclockwise arc from 1 to -i and free on the
    rest; the exploration starts at 1.
    """
    domain = approximate_disk(0j, 1.0, mesh, 0j, 1 + 0j, (1.5 * math.pi, 2 * math.pi))
    out = []
    for s in seeds:
        path = exploration_path(wilson_sample(domain, s), domain)
        try:
            rec = sle.first_entry(path.positions, rho)
            out.append({"seed": s, "angle": rec.angle, "index": rec.index})
        except ProbeNotHit:
            out.append({"seed": s, "angle": None, "index": None})
    return out


def zero_driving_error(dt: float = 1e-4, horizon: float = 1.0) -> float:
    t = np.arange(int(round(horizon / dt)) + 1) * dt
    trace = sle.loewner_trace(sle.DrivingFunction(t, np.zeros_like(t)))
    return float(np.max(np.abs(trace.points - 2j * np.sqrt(t))))


def besq_mean_check(n_paths: int = 10_000, x0: float = 1.0, horizon: float = 1.0, dt: float = 0.01,
                    seed: int = 0, n_sigma: float = 3.0) -> StatReport:
    b = sle.sample_bessel2(x0, dt, horizon, np.random.default_rng(seed), n_paths)
    y = b.values[:, -1] ** 2
    return sigma_report("besq2-mean", float(y.mean()), float(y.std(ddof=1) / math.sqrt(n_paths)),
                        x0 * x0 + 2 * horizon, 0.0, n_sigma, n_paths)


# -- exact identities -------------------------------------------------------------


def brute_force_tree_count(n_vertices: int, edges: list[tuple[int, int]]) -> int:
    """Spanning trees by trying every (n-1)-subset of edges with a union-find check."""
    count = 0
    for subset in itertools.combinations(range(len(edges)), n_vertices - 1):
        parent = list(range(n_vertices))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        ok = True
        for k in subset:
            a, b = find(edges[k][0]), find(edges[k][1])
            if a == b:
                ok = False
                break
            parent[a] = b
        count += ok
    return count


def grid_graph(nx: int, ny: int) -> list[tuple[int, int]]:
    idx = lambda i, j: i * ny + j
    edges = [(idx(i, j), idx(i + 1, j)) for i in range(nx - 1) for j in range(ny)]
    edges += [(idx(i, j), idx(i, j + 1)) for i in range(nx) for j in range(ny - 1)]
    return edges


def small_graph_corpus() -> list[tuple[str, int, list[tuple[int, int]]]]:
    """Named small graphs (name, vertex count, edge list) for matrix-tree checks."""
    cycle = lambda n: [(k, (k + 1) % n) for k in range(n)]
    complete = lambda n: [(a, b) for a in range(n) for b in range(a + 1, n)]
    wheel = lambda n: cycle(n - 1) + [(k, n - 1) for k in range(n - 1)]
    corpus = [
        ("C4", 4, cycle(4)),
        ("C7", 7, cycle(7)),
        ("K4", 4, complete(4)),
        ("K5", 5, complete(5)),
        ("K6", 6, complete(6)),
        ("grid2x3", 6, grid_graph(2, 3)),
        ("grid3x3", 9, grid_graph(3, 3)),
        ("grid2x5", 10, grid_graph(2, 5)),
        ("wheel7", 7, wheel(7)),
        ("petersen", 10, [(k, (k + 1) % 5) for k in range(5)] + [(k, k + 5) for k in range(5)]
         + [(5 + k, 5 + (k + 2) % 5) for k in range(5)]),
        ("ladder6", 12, grid_graph(2, 6)),
        ("multi-theta", 5, [(0, 1), (1, 4), (0, 2), (2, 4), (0, 3), (3, 4), (1, 2)]),
    ]
    return corpus


def matrix_tree_reports() -> list[StatReport]:
    out = []
    for name, n, edges in small_graph_corpus():
        exact = count_spanning_trees(plain_graph(edges, [0]))
        brute = brute_force_tree_count(n, edges)
        err = abs(exact - brute)
        out.append(StatReport(f"matrix-tree-{name}", "rel_err", float(exact), float(err), 0.0, err == 0, n))
    return out


def wilson_uniformity_report(name: str, edges: list[tuple[int, int]], n_samples: int, seed: int,
                             alpha: float = 0.01) -> StatReport:
    """Chi-square of Wilson tree frequencies against the uniform law on enumerated trees."""
    g = plain_graph(edges, [0])
    seeds = [spawn_seed(seed, 0, k) for k in range(n_samples)]
    keys = [wilson_sample(g, s).key() for s in seeds]
    n_trees = count_spanning_trees(g)
    counts: dict = {}
    for k in keys:
        counts[k] = counts.get(k, 0) + 1
    observed = sorted(counts.values()) + [0] * (n_trees - len(counts))
    return chi2_report(name, observed, np.full(n_trees, 1.0 / n_trees), alpha)


def ring_vertices(n: int, k: int) -> tuple:
    """Vertices of a square annulus at L-infinity distance ``k`` from the centre."""
    c = n // 2
    return tuple(sorted((i, j) for i in range(n + 1) for j in range(n + 1)
                        if max(abs(i - c), abs(j - c)) == k))


def radial_vertices(n: int, hole: int, side: int, offset: int = 0) -> tuple:
    """Straight lattice cut from the outer to the inner boundary on one side of a square annulus."""
    lo, hi = (n - hole) // 2, (n + hole) // 2
    c = n // 2 + offset
    if side == 0:
        return tuple((i, c) for i in range(hi, n + 1))
    if side == 1:
        return tuple((c, j) for j in range(hi, n + 1))
    if side == 2:
        return tuple((i, c) for i in range(0, lo + 1))
    return tuple((c, j) for j in range(0, lo + 1))


def ratio_det_case(domain: LatticeDomain, c, d, tol: float, name: str) -> StatReport:
    lap = ratio_det_laplacians(domain, c, d)
    fred = ratio_det_fredholm(domain, tuple(c), tuple(d))
    # relative in the log, with an absolute floor where the log is close to zero
    err = abs(math.log(fred) - math.log(lap)) / max(1.0, abs(math.log(lap)))
    return StatReport(name, "rel_err", math.log(fred), err, tol, err <= tol, len(domain.interior))


def random_identity_cases(n_cases: int, seed: int, max_size: int = 64, tol: float = 1e-8) -> list[StatReport]:
    """Ratio-det identity on random square annuli with random ring or radial cut pairs."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n_cases):
        n = int(rng.choice(np.arange(10, max_size + 1, 2)))
        hole = int(rng.choice(np.arange(2, n - 5, 2)))
        domain = square_annulus(n, hole)
        kind = k % 3
        if kind == 0:
            a, b = sorted(rng.choice(np.arange(hole // 2 + 1, n // 2), 2, replace=False))
            c, d = ring_vertices(n, int(a)), ring_vertices(n, int(b))
        elif kind == 1:
            s1, s2 = rng.choice(4, 2, replace=False)
            c, d = radial_vertices(n, hole, int(s1)), radial_vertices(n, hole, int(s2))
        else:
            c = ring_vertices(n, int(rng.integers(hole // 2 + 1, n // 2)))
            d = tuple(v for v in radial_vertices(n, hole, int(rng.integers(4))) if v not in set(c))
        out.append(ratio_det_case(domain, c, d, tol, f"ratio-det-random-{k}-n{n}-h{hole}"))
    return out


def rn_identity_reports(n_hulls: int, seed: int, tol: float = 1e-6, setup: RNSetup | None = None):
    setup = setup or default_rn_setup()
    out = []
    for k, s in enumerate(seeds_for(seed, "verify-identities", n_hulls, 7)):
        rec = rn_sample(setup, s, True)
        err = rel_err(rec["weight"], rec["tree_ratio"])
        out.append(StatReport(f"rn-identity-{k}", "rel_err", rec["tree_ratio"], err, tol, err <= tol, rec["stop"]))
    return out


def fredholm_truncation_report(n: int = 30, hole: int = 10, order: int = 8, tol: float = 1e-6) -> list[StatReport]:
    """Order-``order`` Fredholm series against the dense determinant on an ``n x n`` ring."""
    domain = square_annulus(n, hole)
    c = ring_vertices(n, hole // 2 + 2)
    d = ring_vertices(n, n // 2 - 2)
    h_cd = extension_operator(domain, c, d)
    h_dc = extension_operator(domain, d, c)
    dense = det_id_minus_HH(h_cd, h_dc).value
    # normalize each column by its largest entry so that |t| <= 1 in the Hadamard bound
    m = composite_matrix(h_cd, h_dc)
    mu = np.abs(m).max(axis=0)
    dens = np.where(mu[None, :] > 0, -m / np.where(mu > 0, mu, 1.0)[None, :], 0.0)
    series = fredholm_series(dens, mu, order)
    err = abs(series.value - dense)
    return [
        StatReport("fredholm-order8-vs-dense", "rel_err", series.value, err / dense, tol, err / dense <= tol, len(d)),
        StatReport("fredholm-hadamard-tail-dominates", "rel_err", series.tail_bound, err,
                   series.tail_bound, err <= series.tail_bound, len(d)),
    ]


def cocycle_reports(seed: int, tol: float = 1e-8, n_loops: int = 3) -> list[StatReport]:
    """Restriction cocycle: four Laplacians against the Fredholm ratio for sampled loops."""
    domain = square_annulus(24, 8)
    H = frozenset((i, j) for i in range(1, 4) for j in range(1, 4))
    d = tuple(v for v in domain.interior if max(v) == 6 and min(v) >= 1 and max(v[0], v[1]) == 6)
    out = []
    seeds = seeds_for(seed, "verify-identities", 200, 3)
    for s, mask in zip(seeds, sample_loop_masks(domain, seeds)):
        loop = loop_from_mask(domain, mask)
        try:
            lap, fred = restriction_cocycle(domain, H, loop, d)
        except UstLoopError:
            continue
        err = rel_err(fred, lap)
        out.append(StatReport(f"cocycle-{len(out)}", "rel_err", -math.log(lap), err, tol, err <= tol, len(loop)))
        if len(out) == n_loops:
            break
    return out


# -- experiments ----------------------------------------------------------------------


def run_verify_identities(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    tol = cfg.tolerance("identity_rel")
    domain = square_annulus(24, 8)
    reports = []
    pairs = [(0, 2), (1, 3), (0, 1), (2, 3)]
    for a, b in pairs:
        reports.append(ratio_det_case(domain, radial_vertices(24, 8, a), radial_vertices(24, 8, b), tol,
                                      f"ratio-det-radial-{a}-{b}"))
    reports.append(ratio_det_case(domain, ring_vertices(24, 6), ring_vertices(24, 10), tol, "ratio-det-rings"))
    reports += rn_identity_reports(10, cfg.master_seed, cfg.tolerance("rn_rel"))
    reports += fredholm_truncation_report(tol=cfg.tolerance("fredholm_rel"))
    reports += cocycle_reports(cfg.master_seed, tol)
    reports += matrix_tree_reports()
    return ExperimentResult([r.row() for r in reports], reports)


def run_loop_law(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    geom = cfg.geometry
    domain = square_annulus(geom.size, geom.hole) if geom.kind == "square-annulus" else square_annulus(5, 1)
    law = loop_law(domain)
    keys = sorted(law, key=lambda k: sorted(k))
    probs = np.array([law[k] for k in keys])
    total = float(probs.sum())
    sum_ok = abs(total - 1.0) <= cfg.tolerance("loop_sum")
    reports = [StatReport("loop-law-sum", "rel_err", total, abs(total - 1.0), cfg.tolerance("loop_sum"),
                          sum_ok, len(keys))]
    ds = dual_structure(domain)
    seeds = seeds_for(cfg.master_seed, "loop-law", cfg.replicates)
    masks = sample_loop_masks(domain, seeds)
    index = {k: i for i, k in enumerate(keys)}
    counts = np.zeros(len(keys))
    for m in masks:
        counts[index[frozenset(ds.edges[k] for k in np.nonzero(m)[0])]] += 1
    reports.append(chi2_report("loop-law-chi2", counts, probs, cfg.tolerance("p_value")))
    records = [{"loop": i, "crossed_edges": sorted(map(list, k)), "probability": float(law[k]),
                "count": int(counts[i])} for i, k in enumerate(keys)]
    return ExperimentResult(records, reports)


def run_sample_ust(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    mesh = cfg.mesh_list[-1]
    domain = build_domain(cfg.geometry, mesh)
    seeds = seeds_for(cfg.master_seed, "sample-ust", cfg.replicates)
    masks = sample_loop_masks(domain, seeds)
    centre = complex(*cfg.geometry.center) if cfg.geometry.kind != "square-annulus" else \
        complex(cfg.geometry.size / 2, cfg.geometry.size / 2)
    radii = loop_radii(domain, masks, centre)
    records = []
    bad = 0
    for r, (s, m) in enumerate(zip(seeds, masks)):
        try:
            loop = loop_from_mask(domain, m)
            length = len(loop)
        except UstLoopError:
            bad += 1
            length = None
        records.append({"replicate": r, "seed": s, "length": length, "min_radius": float(radii[r, 0]),
                        "max_radius": float(radii[r, 1])})
    reports = [StatReport("sample-ust-simple-loops", "rel_err", float(len(seeds) - bad), bad / len(seeds),
                          0.0, bad == 0, len(seeds))]
    return ExperimentResult(records, reports)


def run_rn_derivative(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    geom = cfg.geometry
    size, hole = (geom.size, geom.hole) if geom.kind == "square-annulus" else (24, 8)
    eps = geom.epsilon if geom.epsilon is not None else 2.5
    reports, records = rn_reweighting_test(default_rn_setup(size, hole, eps), cfg.replicates, cfg.master_seed,
                                           cfg.tolerance("rn_sigma"), cfg.tolerance("rn_rel"))
    return ExperimentResult(records, reports)


def convergence_table(annulus: AnnulusSpec, c_radius: float, d_radii: tuple[float, float],
                      meshes: list[float]) -> tuple[float, list[dict]]:
    """Discrete det(Id - HH) for closed circle cuts at each mesh, with its error to the mode product."""
    ref = continuum_fredholm_concentric(annulus, c_radius, d_radii).value
    rows = []
    mid = annulus.center + 0.5 * (annulus.inner_radius + annulus.outer_radius) * 1j
    for mesh in meshes:
        domain = approximate_annulus(annulus, mesh, mid)
        cut = lambda r: approximate_cut(domain, circle_polyline(annulus.center, r), "left").vertices
        value = ratio_det_laplacians(domain, cut(c_radius), cut(d_radii[0]) + cut(d_radii[1]))
        rows.append({"mesh": mesh, "interior_vertices": len(domain.interior), "value": value,
                     "continuum": ref, "rel_err": rel_err(value, ref)})
    return ref, rows


def convergence_reports(rows: list[dict], final_tol: float, max_violations: int) -> list[StatReport]:
    errs = [r["rel_err"] for r in rows]
    violations = sum(b >= a for a, b in zip(errs, errs[1:]))
    return [
        StatReport("converge-final-rel-err", "rel_err", rows[-1]["value"], errs[-1], final_tol,
                   errs[-1] < final_tol, len(rows)),
        StatReport("converge-monotone-violations", "rel_err", float(violations), float(violations),
                   float(max_violations), violations <= max_violations, len(rows)),
    ]


def run_converge_dets(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    geom = cfg.geometry
    _, rows = convergence_table(annulus_of(geom), geom.cut_radius, geom.d_radii, cfg.mesh_list)
    reports = convergence_reports(rows, cfg.tolerance("converge_final"), int(cfg.tolerance("converge_violations")))
    return ExperimentResult(rows, reports, {"convergence": rows})


def run_inversion_symmetry(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    annulus = annulus_of(cfg.geometry)
    mesh = cfg.mesh_list[-1]
    alpha, cap = cfg.tolerance("p_value"), cfg.tolerance("touch_cap")
    reports, radii = inversion_symmetry_test(annulus, mesh, cfg.replicates, cfg.master_seed, alpha, cap,
                                             workers=workers)
    if cfg.negative_control:
        reports.append(inversion_negative_control(annulus, mesh, cfg.replicates, cfg.master_seed, alpha, cap,
                                                  workers))
    records = [{"replicate": k, "min_radius": float(a), "max_radius": float(b)} for k, (a, b) in enumerate(radii)]
    return ExperimentResult(records, reports)


def run_sle_compare(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    mesh = cfg.mesh_list[-1]
    rho = cfg.geometry.probe_radius
    err = zero_driving_error()
    reports = [StatReport("sle-zero-driving", "rel_err", err, err, cfg.tolerance("zero_trace"),
                          err < cfg.tolerance("zero_trace"), 10_001)]
    reports.append(besq_mean_check(seed=spawn_seed(cfg.master_seed, MODULE_IDS["sle-compare"], 9),
                                   n_sigma=cfg.tolerance("besq_sigma")))
    ust = ust_disk_entry_angles(mesh, seeds_for(cfg.master_seed, "sle-compare", cfg.replicates, 0), rho)
    rng = np.random.default_rng(spawn_seed(cfg.master_seed, MODULE_IDS["sle-compare"], 1))
    sle_angles = sle.sle82_entry_angles(cfg.replicates, rho, rng=rng)
    ust_angles = [r["angle"] for r in ust if r["angle"] is not None]
    reports.append(ks_report("sle-vs-ust-entry-angle", ust_angles, sle_angles, cfg.tolerance("p_value"),
                             informational=True))
    records = [dict(r, source="ust") for r in ust]
    records += [{"source": "sle82", "replicate": k, "angle": float(a)} for k, a in enumerate(sle_angles)]
    return ExperimentResult(records, reports)


RUNNERS = {
    "sample-ust": run_sample_ust,
    "loop-law": run_loop_law,
    "verify-identities": run_verify_identities,
    "rn-derivative": run_rn_derivative,
    "converge-dets": run_converge_dets,
    "inversion-symmetry": run_inversion_symmetry,
    "sle-compare": run_sle_compare,
}


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentResult:
    return RUNNERS[cfg.experiment](cfg, workers or cfg.workers)
