"""Invariant checks aggregated by the ``verify`` command.

Every invariant listed for the library modules is implemented here exactly
once.  A check returns a :class:`CheckRecord`; exceptions inside a check are
recorded as failures with the exception text.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import _geom as g
from .doubling import (
    AnalyticIntegrator,
    HomogeneousHarmonic,
    SumField,
    four_sphere_check,
    frequency_profiles,
    monotonicity_check,
    radius_grid,
    resolved_r_min,
)
from .errors import NodalPolyError
from .mesh import interpolate
from .nodal import (
    RHO_MAX,
    Ball,
    BoundaryLayer,
    VertexShell,
    extract_nodal_set,
    flat_bound_for_field,
    nodal_measure,
    trend_slope,
    yau_upper_survey,
)
from .polytope import build_polytope, face_distance_constant, sampled_face_constant, skeleton_distances
from .spectral import LiftedField, assemble, solve_eigen, solve_polytope
from .star import (
    FAULT_SHRINK,
    boundary_cover,
    cover_verify,
    max_star_radius,
    msr_lower_bounds,
    star_certificate,
)

log = logging.getLogger(__name__)

PASS, FAIL, SKIP = "pass", "fail", "skipped"


@dataclass
class CheckRecord:
    name: str
    module: str
    anchor: str
    status: str
    constants: dict = field(default_factory=dict)
    tolerance: dict = field(default_factory=dict)
    provenance: str = "measured"
    reason: str = ""
    seconds: float = 0.0

    def as_dict(self):
        d = dict(self.__dict__)
        d.pop("seconds")
        return d


class Context:
    """Shared, lazily computed inputs for the checks of one run."""

    def __init__(self, P, cfg):
        self.P = P
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self._solved = None

    @property
    def solved(self):
        if self._solved is None:
            self._solved = solve_polytope(self.P, self.cfg.h, self.cfg.count, self.cfg.grade_corners,
                                          self.cfg.cache)
        return self._solved

    @property
    def mesh(self):
        return self.solved[0]

    @property
    def pairs(self):
        return self.solved[1]

    def interior_points(self, count):
        P = self.P
        lo, hi = P.vertices.min(axis=0), P.vertices.max(axis=0)
        out = np.zeros((0, 2))
        while len(out) < count:
            pts = lo + (hi - lo) * self.rng.random((4 * count, 2))
            out = np.concatenate([out, pts[P.contains(pts, tol=0.0)]])
        return out[:count]

    def centers(self):
        """Profile centres (x, t): vertices, edge midpoints and the vertex mean."""
        P = self.P
        a, b = P.edges
        pts = [P.vertices.mean(axis=0)] if P.contains(P.vertices.mean(axis=0))[0] else []
        pts += list(P.vertices) + list(0.5 * (a + b))
        return [np.array([p[0], p[1], 0.0]) for p in pts]


# ---------------------------------------------------------------- registry

CHECKS = []


def check(name, module, anchor):
    def wrap(fn):
        CHECKS.append((name, module, anchor, fn))
        return fn

    return wrap


def _result(ok, constants=None, tolerance=None, provenance="measured", reason=""):
    return (PASS if ok else FAIL), constants or {}, tolerance or {}, provenance, reason


# ------------------------------------------------------------ polytope-core


@check("skeleton_lipschitz", "polytope-core", "skeleton distance is 1-Lipschitz")
def _skeleton_lipschitz(ctx):
    n = ctx.cfg.samples_small
    x, y = ctx.interior_points(n), ctx.interior_points(n)
    worst = 0.0
    for k in range(ctx.P.dimension):
        dx, dy = skeleton_distances(ctx.P, x, k), skeleton_distances(ctx.P, y, k)
        worst = max(worst, float(np.max(np.abs(dx - dy) - np.linalg.norm(x - y, axis=1))))
    return _result(worst <= 1e-12, {"pairs": n, "worst_excess": worst}, {"abs": 1e-12})


@check("nested_skeletons", "polytope-core", "lower skeletons are farther away")
def _nested(ctx):
    x = ctx.interior_points(ctx.cfg.samples_small)
    d = [skeleton_distances(ctx.P, x, k) for k in range(ctx.P.dimension)]
    worst = max(float(np.max(d[k + 1] - d[k])) for k in range(len(d) - 1))
    return _result(worst <= 1e-12, {"points": len(x), "worst_excess": worst}, {"abs": 1e-12})


@check("face_constant_inequality", "polytope-core", "face-separation inequality d(x,G) >= c* d(x,dF)")
def _face_ineq(ctx):
    P = ctx.P
    cs = P.face_constant.c_star
    V = P.vertices
    worst, count = math.inf, 0
    for F in P.lattice[1]:
        a, b = V[F.vertices[0]], V[F.vertices[1]]
        t = ctx.rng.random(ctx.cfg.samples_small)[:, None]
        xs = a + t * (b - a)
        dbd = np.minimum(np.linalg.norm(xs - a, axis=1), np.linalg.norm(xs - b, axis=1))
        for gi, G in enumerate(P.lattice[1]):
            if gi in F.facets:
                continue
            dG = g.point_segment_distance(xs, V[G.vertices[0]], V[G.vertices[1]])
            worst = min(worst, float(np.min(dG - cs * dbd)))
            count += len(xs)
    return _result(worst >= -1e-12, {"c_star": cs, "samples": count, "worst_margin": worst},
                   {"abs": 1e-12})


@check("face_constant_oracle", "polytope-core", "closed-form face constant against a sampling oracle")
def _face_oracle(ctx):
    fc = face_distance_constant(ctx.P)
    sampled = sampled_face_constant(ctx.P, resolution=1e-5)
    diff = abs(fc.c_prime - sampled)
    return _result(diff <= 1e-6, {"c_prime": fc.c_prime, "sampled": sampled, "diff": diff,
                                  "c_star": fc.c_star}, {"abs": 1e-6}, "analytic vs sampled")


# ------------------------------------------------------------ star-geometry


def _segment_blocked(P, x, ys, steps=64):
    t = (np.arange(1, steps + 1) / steps)[None, :, None]
    pts = x[None, None, :] + t * (ys[:, None, :] - x[None, None, :])
    inside = P.contains(pts.reshape(-1, 2)).reshape(len(ys), steps)
    return ~inside.all(axis=1)


@check("certificate_soundness", "star-geometry", "star certificate against ray casting")
def _soundness(ctx):
    P = ctx.P
    centers = np.concatenate([ctx.interior_points(24), P.boundary_points(8)])
    radii = P.diam * (0.05 + 0.95 * ctx.rng.random(len(centers)))
    star_cases = violated_cases = blocked = unconfirmed = skipped = 0
    for x, r in zip(centers, radii):
        cert = star_certificate(P, x, r)
        if cert.star_shaped and cert.n_components == 1:
            ys = x + r * np.sqrt(ctx.rng.random(4000))[:, None] * _unit(ctx.rng.random(4000))
            ys = ys[P.contains(ys)][:1000]
            blocked += int(_segment_blocked(P, x, ys).sum())
            star_cases += 1
        elif not cert.star_shaped:
            i, y = cert.witness
            normal_fails = float(np.dot(y - x, P.facets[i].normal)) < 0
            segment_fails = bool(_segment_blocked(P, x, y[None])[0])
            unconfirmed += int(not (normal_fails or segment_fails))
            violated_cases += 1
        else:
            skipped += 1
    return _result(blocked == 0 and unconfirmed == 0,
                   {"star_cases": star_cases, "violated_cases": violated_cases,
                    "blocked_segments": blocked, "unconfirmed_witnesses": unconfirmed,
                    "multi_component_cases": skipped}, {"segment_samples": 64})


def _unit(u):
    th = 2 * math.pi * u
    return np.stack([np.cos(th), np.sin(th)], axis=1)


@check("msr_dominance", "star-geometry", "measured star radius dominates every lower bound")
def _msr_dominance(ctx):
    P = ctx.P
    n = ctx.cfg.msr_samples
    t = ctx.rng.random(n)
    base = P.boundary_points(n)
    # boundary-adjacent points: on the boundary or nudged inwards
    pts = []
    for i, p in enumerate(base):
        q = p if t[i] < 0.5 else p + (ctx.rng.random(2) - 0.5) * 0.05 * P.diam
        pts.append(q if P.contains(q)[0] else p)
    worst, violations = math.inf, 0
    for x in pts:
        R = max_star_radius(P, x, bounds=False).radius
        lb = msr_lower_bounds(P, x)
        for key in ("generic", "stratum", "vertex"):
            if lb[key] is not None:
                m = R - lb[key] + 1e-9 * P.diam
                worst = min(worst, m)
                violations += int(m < 0)
    return _result(violations == 0, {"points": n, "worst_margin": worst, "violations": violations},
                   {"abs": 1e-9 * P.diam})


@check("interior_stratum", "star-geometry", "small balls inside the domain are star-shaped")
def _interior(ctx):
    P = ctx.P
    x = ctx.interior_points(200)
    d = skeleton_distances(P, x, P.dimension - 1)
    bad = 0
    for p, r in zip(x, d * ctx.rng.random(len(x))):
        if r > 0 and not star_certificate(P, p, r).star_shaped:
            bad += 1
    return _result(bad == 0, {"points": len(x), "failures": bad})


@check("cover_invariants", "star-geometry", "boundary star cover: coverage and certified balls")
def _cover(ctx):
    P = ctx.P
    r0 = ctx.cfg.r0 if ctx.cfg.r0 is not None else P.vertex_separation
    cover = boundary_cover(P, r0, ratio=ctx.cfg.cover_ratio)
    if ctx.cfg.fault == "shrunken-cover":
        cover = cover.with_radii_scaled(FAULT_SHRINK)
    rep = cover_verify(P, cover, samples=ctx.cfg.samples, raise_on_failure=False)
    ok = rep["gaps"] == 0 and rep["certificate_failures"] == 0
    return _result(ok, dict(rep, r0=r0, fault=ctx.cfg.fault), {"samples": ctx.cfg.samples})


# ------------------------------------------------------------ spectral-solver


@check("mesh_quality", "spectral-solver", "mesh areas positive and minimum angle")
def _mesh_quality(ctx):
    m = ctx.mesh
    area_err = abs(float(m.areas.sum()) - ctx.P.area) / ctx.P.area
    ok = bool(np.all(m.areas > 0)) and m.min_angle >= 20.0 - 1e-9 and area_err <= 1e-12
    return _result(ok, {"triangles": len(m.triangles), "min_angle": m.min_angle,
                        "area_rel_error": area_err}, {"min_angle": 20.0, "area_rel": 1e-12})


def _rectangle_sides(P):
    V = P.vertices
    if len(V) != 4:
        return None
    e = np.diff(np.vstack([V, V[:1]]), axis=0)
    if np.any(np.abs(e).min(axis=1) > 1e-12):
        return None
    return float(np.ptp(V[:, 0])), float(np.ptp(V[:, 1]))


@check("eigen_from_above", "spectral-solver", "P1 eigenvalues converge from above")
def _from_above(ctx):
    sides = _rectangle_sides(ctx.P)
    if sides is None:
        return SKIP, {}, {}, "analytic", "no closed-form spectrum for this polygon"
    a, b = sides
    k = min(6, ctx.cfg.count)
    exact = sorted(math.pi ** 2 * (i * i / a ** 2 + j * j / b ** 2)
                   for i in range(1, 12) for j in range(1, 12))[:k]
    from .mesh import generate_mesh

    gaps = []
    for h in (2 * ctx.cfg.h, ctx.cfg.h):
        vals = [p.value for p in solve_eigen(generate_mesh(ctx.P, h), k)]
        gaps.append(np.array(vals) - np.array(exact))
    above = bool(np.all(gaps[0] > 0) and np.all(gaps[1] > 0))
    ratio = float(np.min(gaps[0] / gaps[1]))
    return _result(above and ratio > 2.0, {"gaps_2h": gaps[0].tolist(), "gaps_h": gaps[1].tolist(),
                                           "min_gap_ratio": ratio},
                   {"gap_ratio_min": 2.0}, "analytic")


@check("orthogonality", "spectral-solver", "mass-orthonormal eigenvectors")
def _orthogonality(ctx):
    _, M = assemble(ctx.mesh)
    V = np.stack([p.nodal for p in ctx.pairs], axis=1)
    G = V.T @ (M @ V)
    off = float(np.max(np.abs(G - np.eye(len(G)))))
    return _result(off <= 1e-8, {"max_deviation": off, "pairs": len(G)}, {"abs": 1e-8})


@check("lifting_identities", "spectral-solver", "lifted field: time derivative and trace")
def _lifting(ctx):
    pts = ctx.interior_points(100)
    worst = 0.0
    for p in ctx.pairs[:5]:
        u = LiftedField(p.field, p.value)
        t = ctx.rng.random(len(pts)) - 0.5
        worst = max(worst, float(np.max(np.abs(u.dt(pts, t) - math.sqrt(p.value) * u(pts, t)))))
        worst = max(worst, float(np.max(np.abs(u(pts, 0.0) - p.field(pts)))))
    return _result(worst == 0.0, {"max_abs_deviation": worst}, {"abs": 0.0})


@check("ordering_positivity", "spectral-solver", "eigenvalues positive and sorted")
def _ordering(ctx):
    vals = np.array([p.value for p in ctx.pairs])
    res = max(p.residual for p in ctx.pairs)
    ok = bool(np.all(vals > 0) and np.all(np.diff(vals) >= 0))
    return _result(ok, {"lambda_1": float(vals[0]), "lambda_max": float(vals[-1]),
                        "max_residual": res}, {"residual": 1e-8})


# ------------------------------------------------------------ doubling-index


def _big_box():
    return build_polytope(vertices=[[-10, -10], [10, -10], [10, 10], [-10, 10]])


def _half_plane():
    return build_polytope(vertices=[[-10, 0], [10, 0], [10, 10], [-10, 10]])


@check("scaling_exactness", "doubling-index", "homogeneous harmonics: N = 2k + n and beta = k")
def _scaling(ctx):
    worst_N = worst_b = 0.0
    cases = []
    for k in (1, 2, 3, 5):
        for P, phase in ((_big_box(), 0.0), (_half_plane(), math.pi / 2)):
            u = HomogeneousHarmonic(k, phase=phase)
            prof = frequency_profiles(AnalyticIntegrator(P, u, u.gradient), P, (0.0, 0.0),
                                      [0.25, 0.5, 1.0])[0]
            wN = float(np.max(np.abs(prof.N - (2 * k + 2))))
            wb = float(np.max(np.abs(prof.beta - k)))
            worst_N, worst_b = max(worst_N, wN), max(worst_b, wb)
            cases.append(k)
    return _result(worst_N <= 1e-9 and worst_b <= 1e-9,
                   {"cases": len(cases), "worst_N": worst_N, "worst_beta": worst_b},
                   {"abs": 1e-9}, "analytic")


def _lifted(ctx):
    from .doubling import LiftedIntegrator, MeshIntegrator

    pairs = ctx.pairs[: ctx.cfg.profile_modes]
    V = np.stack([p.nodal for p in pairs], axis=1)
    return LiftedIntegrator(MeshIntegrator(ctx.mesh, V, ctx.P), np.array([p.value for p in pairs]))


def _resolved_centers(ctx):
    """Centres whose resolved smallest radius leaves at least a doubling of the grid."""
    out = []
    for c in ctx.centers():
        r = resolved_r_min(ctx.mesh, c, ctx.cfg.r_min, ctx.cfg.resolution_factor)
        if 2 * r <= ctx.cfg.r_max:
            out.append((c, r))
    return out


def _profiles(ctx):
    """Certified lifted eigen profiles at the configured centres plus harmonic profiles."""
    cfg = ctx.cfg
    I = _lifted(ctx)
    out = []
    for c, r in _resolved_centers(ctx):
        out.extend(frequency_profiles(I, ctx.P, c, radius_grid(r, cfg.r_max, cfg.grid_ratio)))
    box = _big_box()
    for k, phase in ((1, 0.0), (2, 0.3), (3, 1.0)):
        u = SumField((1.0, HomogeneousHarmonic(k, phase=phase)), (0.1, HomogeneousHarmonic(k + 3)))
        out.extend(frequency_profiles(AnalyticIntegrator(box, u, u.gradient), box, (0.0, 0.0),
                                      radius_grid(0.05, 2.0, cfg.grid_ratio)))
    return out


@check("gated_monotonicity", "doubling-index", "doubling index and frequency nondecreasing")
def _monotone(ctx):
    profiles = _profiles(ctx)
    reps = [monotonicity_check(p, ctx.cfg.mono_tol) for p in profiles]
    cert = [r for r in reps if r.certified]
    bad = [r for r in cert if not r.passed]
    return _result(not bad and len(cert) > 0,
                   {"profiles": len(reps), "certified": len(cert), "failing": len(bad),
                    "worst_N": max((r.worst_N for r in cert), default=0.0),
                    "worst_beta": max((r.worst_beta for r in cert), default=0.0)},
                   {"abs": ctx.cfg.mono_tol})


@check("derivative_identity", "doubling-index", "log-derivative of H equals (n-1)/r + 2 beta/r")
def _derivative(ctx):
    worst = 0.0
    eps = 1e-4
    cases = 0
    for P, k, phase in ((_big_box(), 2, 0.4), (_half_plane(), 3, math.pi / 2)):
        u = SumField((1.0, HomogeneousHarmonic(k, phase=phase)),
                     (0.2, HomogeneousHarmonic(k + 2, phase=phase)))
        I = AnalyticIntegrator(P, u, u.gradient)
        for r in (0.3, 0.7, 1.5):
            _, H, D = I.moments(np.zeros(2), [r * (1 - eps), r, r * (1 + eps)])
            H, D = H[:, 0], D[:, 0]
            lhs = (math.log(H[2]) - math.log(H[0])) / (2 * eps * r) - 1.0 / r
            rhs = 2 * (r * D[1] / H[1]) / r
            worst = max(worst, abs(lhs - rhs) / abs(rhs))
            cases += 1
    return _result(worst <= 1e-6, {"cases": cases, "worst_rel": worst}, {"rel": 1e-6},
                   "analytic fields, central differences")


@check("four_sphere", "doubling-index", "four-sphere inequality H(2tau)H(t) <= H(tau)H(2t)")
def _four_sphere(ctx):
    I = _lifted(ctx)
    cases = [(I, ctx.P, c, r) for c, r in _resolved_centers(ctx)]
    lifted = len(cases)
    # harmonic fields keep the check meaningful when no eigen centre is resolved
    box = _big_box()
    for k, phase in ((1, 0.0), (2, 0.3), (3, 1.0)):
        u = SumField((1.0, HomogeneousHarmonic(k, phase=phase)), (0.1, HomogeneousHarmonic(k + 3)))
        cases.append((AnalyticIntegrator(box, u, u.gradient), box, np.zeros(2), 0.2))
    fails = certified = total = 0
    for J, P, c, r in cases:
        for tau, t in ((r, 1.5 * r), (r, 2 * r), (1.5 * r, 2 * r)):
            for rep in four_sphere_check(J, P, c, tau, t, column=None):
                total += 1
                if rep.certified:
                    certified += 1
                    fails += int(not rep.holds)
    return _result(fails == 0 and certified > 0,
                   {"pairs": total, "certified": certified, "failures": fails,
                    "lifted_centres": lifted}, {"rel": 1e-6})


# ------------------------------------------------------------ nodal-analysis


def _chord_length(P, c):
    """Exact length of {x = c} inside the polygon (even-odd pairing of crossings)."""
    a, b = P.edges
    ys = []
    for p, q in zip(a, b):
        if (p[0] - c) * (q[0] - c) < 0:
            s = (c - p[0]) / (q[0] - p[0])
            ys.append(p[1] + s * (q[1] - p[1]))
    ys = np.sort(ys)
    return float(np.sum(ys[1::2] - ys[0::2]))


@check("faithfulness", "nodal-analysis", "extracted zero set of a linear field")
def _faithful(ctx):
    P, m = ctx.P, ctx.mesh
    lo, hi = P.vertices[:, 0].min(), P.vertices[:, 0].max()
    c = lo + (hi - lo) * 0.3137
    z = extract_nodal_set(interpolate(m, lambda p: p[:, 0] - c))
    exact = _chord_length(P, c)
    haus = float(np.max(np.abs(z.segments[..., 0] - c))) if len(z) else math.inf
    err = abs(z.length - exact)
    return _result(err <= m.h and haus <= m.h,
                   {"length": z.length, "exact": exact, "hausdorff": haus}, {"abs": m.h})


@check("additivity", "nodal-analysis", "nodal length is additive over partitions")
def _additive(ctx):
    P = ctx.P
    worst = 0.0
    for p in ctx.pairs[: min(10, len(ctx.pairs))]:
        z = extract_nodal_set(p.field)
        if not len(z):
            continue
        total = z.length
        c = P.vertices.mean(axis=0)
        parts = [
            [Ball(c, 0.3 * P.diam), ~Ball(c, 0.3 * P.diam)],
            [BoundaryLayer(P, 0.05 * P.diam), ~BoundaryLayer(P, 0.05 * P.diam)],
        ]
        edges = [-1.0] + [P.diam * 2.0 ** -k for k in range(6, 0, -1)] + [math.inf]
        parts.append([VertexShell(P, lo, hi) for lo, hi in zip(edges[:-1], edges[1:])])
        for regions in parts:
            s = sum(nodal_measure(z, r) for r in regions)
            worst = max(worst, abs(s - total) / total)
    return _result(worst <= 1e-12, {"worst_rel": worst}, {"rel": 1e-12})


@check("scaling_trend", "nodal-analysis", "nodal length over sqrt(lambda) bounded with no growth trend")
def _scaling_trend(ctx):
    if len(ctx.pairs) < 10:
        return SKIP, {}, {}, "measured", "fewer than 10 eigenpairs"
    s = yau_upper_survey(ctx.P, ctx.pairs, skip=1)
    lam = [r["lambda"] for r in s.rows]
    rat = [r["ratio"] for r in s.rows]
    half = len(lam) // 2
    upper = trend_slope(lam[half:], rat[half:], 0)
    consts = {"max_ratio": s.max_ratio, "slope": s.slope, "slope_upper_half": upper,
              "pairs": len(lam)}
    return _result(s.slope <= ctx.cfg.slope_guard, consts, {"slope": ctx.cfg.slope_guard})


@check("flat_bound_structure", "nodal-analysis", "local flat-boundary ratio below ten times calibration")
def _flat(ctx):
    P, pairs = ctx.P, ctx.pairs
    worst, count, skipped = 0.0, 0, 0
    a, b = P.edges
    pts = list(0.5 * (a + b)) + list(ctx.interior_points(6))
    for p in pairs[: min(8, len(pairs))]:
        z = extract_nodal_set(p.field)
        for x in pts:
            dv = float(np.min(np.linalg.norm(P.vertices - x, axis=1)))
            r = min(0.05 * P.diam, dv / 8)
            try:
                rep = flat_bound_for_field(p.field, P, x, r, z=z)
            except NodalPolyError:
                skipped += 1
                continue
            worst = max(worst, rep.rho)
            count += 1
    return _result(worst <= RHO_MAX and count > 0,
                   {"balls": count, "skipped": skipped, "worst_rho": worst}, {"rho_max": RHO_MAX})


# ------------------------------------------------------------ cli-report


@check("determinism", "cli-report", "identical config and seed give identical report bytes")
def _determinism(ctx):
    return SKIP, {}, {}, "measured", "needs two independent runs; exercised by running verify twice"


@check("cache_correctness", "cli-report", "cached and fresh eigenpairs agree to the last bit")
def _cache(ctx):
    if ctx.cfg.cache is None:
        return SKIP, {}, {}, "measured", "no cache directory configured"
    fresh = solve_eigen(ctx.mesh, ctx.cfg.count)
    _, cached = solve_polytope(ctx.P, ctx.cfg.h, ctx.cfg.count, ctx.cfg.grade_corners, ctx.cfg.cache)
    same = all(np.array_equal(f.coeffs, c.coeffs) and f.value == c.value for f, c in zip(fresh, cached))
    return _result(same, {"pairs": len(fresh)}, {"ulps": 0})


@check("exit_code", "cli-report", "exit status is nonzero exactly when a check fails")
def _exit(ctx):
    return SKIP, {}, {}, "measured", "property of the process exit status, set after all checks"


def run_checks(P, cfg, only=None):
    ctx = Context(P, cfg)
    records = []
    for name, module, anchor, fn in CHECKS:
        if only and name not in only:
            continue
        t0 = time.perf_counter()
        try:
            status, consts, tol, prov, reason = fn(ctx)
        except NodalPolyError as exc:
            status, consts, tol, prov, reason = FAIL, {}, {}, "measured", f"{type(exc).__name__}: {exc}"
        rec = CheckRecord(name, module, anchor, status, consts, tol, prov, reason,
                          time.perf_counter() - t0)
        log.info("%-26s %s", name, status)
        records.append(rec)
    return records
