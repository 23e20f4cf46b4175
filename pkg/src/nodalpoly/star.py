"""Star-shape certificates, maximum star-shape radius and boundary covers.

Everything here is planar except :func:`msr_lower_bounds`, which only needs
skeleton distances and therefore works for polyhedra too.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import _geom as g
from .errors import (
    CertificateFailure,
    ChartMiss,
    CoverageGap,
    NonPositiveRadius,
    PointOutsideDomain,
    RadiusTooLarge,
)
from .polytope import boundary_distance, skeleton_distance

TWO_PI = 2.0 * math.pi
COVER_RATIO = 1.0 / 32.0
# fault injection: neighbouring level-1 balls overlap by about a factor two, so
# the shrink must be well below 1/2 to open gaps
FAULT_SHRINK = 0.25


@dataclass
class StarCertificate:
    center: np.ndarray
    radius: float
    star_shaped: bool
    witness: tuple | None  # (facet index, boundary point) of a violation
    component_id: int
    n_components: int
    worst: float  # smallest (y - x) . n over the certified pieces
    pieces: list = field(default_factory=list)  # (edge, t0, t1) in the component

    @property
    def verdict(self):
        return "star-shaped" if self.star_shaped else "violated"

    @property
    def whole(self):
        """The full intersection (not only x's component) is star-shaped."""
        return self.star_shaped and self.n_components == 1

    def as_dict(self):
        w = None
        if self.witness is not None:
            w = {"facet": int(self.witness[0]), "point": np.asarray(self.witness[1]).tolist()}
        return {
            "center": np.asarray(self.center).tolist(),
            "radius": self.radius,
            "verdict": self.verdict,
            "witness": w,
            "component_id": self.component_id,
            "n_components": self.n_components,
        }


def _angle(p, c):
    return math.atan2(p[1] - c[1], p[0] - c[0]) % TWO_PI


def _ccw_gap(theta_from, theta_to):
    d = (theta_to - theta_from) % TWO_PI
    if d > TWO_PI - 1e-12:
        d = 0.0
    return d


def _subtended(p, q, c):
    u, v = p - c, q - c
    return math.atan2(g.cross2(u, v), float(np.dot(u, v)))


def disk_components(P, x, r):
    """Boundary loops of the components of B_r(x) ∩ P.

    Returns ``(loops, pieces)`` where ``pieces`` lists ``(edge, t0, t1)`` for
    every boundary portion inside the open disk and each loop is
    ``(piece indices, arc spans)``.  An empty ``loops`` list with no pieces
    means the disk does not reach the boundary.
    """
    a, b = P.edges
    m = len(a)
    x = np.asarray(x, dtype=float)
    raw = []
    for i in range(m):
        tt = g.segment_circle_params(a[i], b[i], x, r)
        if tt is not None:
            raw.append((i, tt[0], tt[1]))
    if not raw:
        return [], []
    vin = np.linalg.norm(P.vertices - x, axis=1) < r
    # group pieces into chains of consecutive boundary portions
    by_edge = {p[0]: k for k, p in enumerate(raw)}
    starts = []
    for k, (i, t0, t1) in enumerate(raw):
        prev = (i - 1) % m
        if not (t0 == 0.0 and vin[i] and prev in by_edge):
            starts.append(k)
    chains = []
    if not starts:
        # the whole boundary lies in the disk
        return [([k for k in range(len(raw))], [])], raw
    for k0 in starts:
        chain = [k0]
        k = k0
        while True:
            i, t0, t1 = raw[k]
            nxt = (i + 1) % m
            if t1 == 1.0 and vin[nxt] and nxt in by_edge:
                k = by_edge[nxt]
                if k == k0:
                    break
                chain.append(k)
            else:
                break
        chains.append(chain)

    def point(k, t):
        i = raw[k][0]
        return a[i] + t * (b[i] - a[i])

    entry = [_angle(point(c[0], raw[c[0]][1]), x) for c in chains]
    exit_ = [_angle(point(c[-1], raw[c[-1]][2]), x) for c in chains]
    nxt_chain = []
    for ci in range(len(chains)):
        gaps = [_ccw_gap(exit_[ci], entry[cj]) for cj in range(len(chains))]
        cj = int(np.argmin(gaps))
        nxt_chain.append((cj, gaps[cj]))
    seen = [False] * len(chains)
    loops = []
    for ci in range(len(chains)):
        if seen[ci]:
            continue
        members, arcs = [], []
        c = ci
        while not seen[c]:
            seen[c] = True
            members.extend(chains[c])
            cj, gap = nxt_chain[c]
            arcs.append(gap)
            c = cj
        loops.append((members, arcs))
    return loops, raw


def star_certificate(P, x, r, tol=None):
    """Decide whether x's component of B_r(x) ∩ P is star-shaped w.r.t. x."""
    if P.dimension != 2:
        raise NotImplementedError("component extraction is planar only")
    if not r > 0:
        raise NonPositiveRadius(f"radius must be positive, got {r}")
    x = np.asarray(x, dtype=float)
    if not P.contains(x)[0]:
        raise PointOutsideDomain(f"{x.tolist()} is outside the polytope")
    tol = P.tol * 10 if tol is None else tol
    loops, raw = disk_components(P, x, r)
    if not raw:
        return StarCertificate(x, r, True, None, 0, 1, math.inf, [])
    a, b = P.edges
    on_boundary = boundary_distance(P, x) <= tol
    comp = None
    if on_boundary:
        d = g.points_to_segments(x, a, b)[0]
        touching = set(np.nonzero(d <= tol)[0].tolist())
        for li, (members, _) in enumerate(loops):
            if any(raw[k][0] in touching for k in members):
                comp = li
                break
    else:
        for li, (members, arcs) in enumerate(loops):
            total = sum(arcs)
            for k in members:
                i, t0, t1 = raw[k]
                p = a[i] + t0 * (b[i] - a[i])
                q = a[i] + t1 * (b[i] - a[i])
                total += _subtended(p, q, x)
            if abs(total / TWO_PI - 1.0) < 0.25:
                comp = li
                break
    if comp is None:
        raise PointOutsideDomain("could not locate the component containing the centre")
    members = loops[comp][0]
    worst = math.inf
    witness = None
    for k in members:
        i, t0, t1 = raw[k]
        val = float(np.dot(a[i] - x, P.facets[i].normal))
        if val < worst:
            worst = val
            y = a[i] + 0.5 * (t0 + t1) * (b[i] - a[i])
            witness = (i, y)
    star = worst >= -tol
    return StarCertificate(
        x, float(r), bool(star), None if star else witness, comp, len(loops), worst,
        [raw[k] for k in members],
    )


@dataclass
class MSRResult:
    center: np.ndarray
    radius: float
    r_lo: float
    r_hi: float
    bounds: dict
    nonmonotone: list = field(default_factory=list)

    def as_dict(self):
        return {
            "center": np.asarray(self.center).tolist(),
            "R_star": self.radius,
            "bracket": [self.r_lo, self.r_hi],
            "bounds": self.bounds,
            "nonmonotone": self.nonmonotone,
        }


def max_star_radius(P, x, tol=None, scan=0, bounds=True):
    """Largest certified radius (capped at diam P) found by bisection.

    Both bracket ends are re-certified; ``scan`` extra radii above the
    failing end are probed and any passing one is recorded as a
    non-monotone event.
    """
    x = np.asarray(x, dtype=float)
    D = P.diam
    tol = 1e-6 * D if tol is None else tol
    lb = msr_lower_bounds(P, x) if bounds else {}
    if star_certificate(P, x, D).star_shaped:
        return MSRResult(x, D, D, D, lb)
    lo, hi = 0.0, D
    # every applicable lower bound is a certified starting point when it checks out
    start = max([v for k, v in lb.items() if k in ("generic", "stratum", "vertex") and v] or [0.0])
    start = min(start, D) * (1 - 1e-9)
    if start > 0 and star_certificate(P, x, start).star_shaped:
        lo = start
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if star_certificate(P, x, mid).star_shaped:
            lo = mid
        else:
            hi = mid
    events = []
    if lo > 0 and not star_certificate(P, x, lo).star_shaped:
        events.append({"radius": lo, "expected": "star-shaped"})
    if star_certificate(P, x, hi).star_shaped:
        events.append({"radius": hi, "expected": "violated"})
    for r in np.linspace(hi, D, scan + 2)[1:-1] if scan else []:
        if star_certificate(P, x, float(r)).star_shaped:
            events.append({"radius": float(r), "expected": "violated"})
    return MSRResult(x, lo, lo, hi, lb, events)


def stratum(P, x, tol=None):
    """Lowest-dimensional skeleton containing x (n for interior points)."""
    tol = P.tol * 10 if tol is None else tol
    for k in range(P.dimension):
        if skeleton_distance(P, x, k, check=False) <= tol:
            return k
    return P.dimension


def msr_lower_bounds(P, x):
    """All applicable geometric lower bounds for the MSR at x.

    ``generic`` is d(x, F^{n-2}); ``stratum`` is c* d(x, F^{k-1}) for x in
    the relative interior of a k-face (k >= 1, including facets); ``vertex``
    is the smallest distance to a facet not containing the vertex x;
    ``R0`` is the minimum of the latter over all vertices.
    """
    x = np.asarray(x, dtype=float)
    if not P.contains(x)[0]:
        raise PointOutsideDomain(f"{x.tolist()} is outside the polytope")
    n = P.dimension
    k = stratum(P, x)
    out = {
        "stratum_dim": k,
        "generic": skeleton_distance(P, x, n - 2, check=False),
        "stratum": None,
        "vertex": None,
        "R0": P.vertex_separation,
        "c_star": P.face_constant.c_star,
    }
    if 1 <= k <= n - 1:
        out["stratum"] = P.face_constant.c_star * skeleton_distance(P, x, k - 1, check=False)
    if k == 0:
        iv = int(np.argmin(np.linalg.norm(P.vertices - x, axis=1)))
        vf = P.lattice[0][iv]
        from .polytope import point_face_distance

        out["vertex"] = min(
            point_face_distance(P, x, G)
            for gi, G in enumerate(P.lattice[n - 1])
            if gi not in vf.facets
        )
    return out


@dataclass
class ShiftCheck:
    holds: bool
    r_star_base: float
    r_star_shifted: float
    r_double_star: float
    t: float

    def as_dict(self):
        return dict(self.__dict__)


def vertical_shift_check(P, x, frame, t, tol=None):
    """Compare the MSR after moving ``t`` up the chart axis with half of R**(x)."""
    x = np.asarray(x, dtype=float)
    r0 = frame.radius
    if np.linalg.norm(x - frame.origin) > 0.5 * r0 + P.tol:
        raise ChartMiss("x must lie in the half-radius chart ball")
    if not P.contains(x)[0]:
        raise ChartMiss("x lies outside the polytope")
    tol = 1e-9 * P.diam if tol is None else tol
    base = max_star_radius(P, x, tol=tol, bounds=False).radius
    rss = min(base, 0.25 * r0)
    if not (0 < t <= 0.5 * rss * (1 + 1e-12)):
        raise ValueError(f"t must lie in (0, {0.5 * rss}]")
    y = x + t * np.asarray(frame.up)
    shifted = max_star_radius(P, y, tol=tol, bounds=False).radius
    return ShiftCheck(bool(shifted >= 0.5 * rss - 2 * tol), base, shifted, rss, float(t))


# ------------------------------------------------------------------ covers


@dataclass
class CoverBall:
    level: int
    index: int
    center: np.ndarray
    certified_radius: float
    covering_radius: float
    certificate: StarCertificate | None = None

    def as_dict(self):
        return {
            "level": self.level,
            "center": np.asarray(self.center).tolist(),
            "certified_radius": self.certified_radius,
            "covering_radius": self.covering_radius,
        }


@dataclass
class StarCover:
    balls: list
    r0: float
    c_star: float
    ratio: float = COVER_RATIO
    stats: dict = field(default_factory=dict)

    def level(self, k):
        return [b for b in self.balls if b.level == k]

    def as_dict(self):
        return {
            "r0": self.r0,
            "c_star": self.c_star,
            "ratio": self.ratio,
            "stats": self.stats,
            "balls": [b.as_dict() for b in self.balls],
        }

    def with_radii_scaled(self, factor):
        balls = [
            CoverBall(b.level, b.index, b.center, b.certified_radius * factor,
                      b.covering_radius * factor, b.certificate)
            for b in self.balls
        ]
        return StarCover(balls, self.r0, self.c_star, self.ratio, dict(self.stats))

    def without(self, idx):
        balls = [b for i, b in enumerate(self.balls) if i != idx]
        return StarCover(balls, self.r0, self.c_star, self.ratio, dict(self.stats))


def _interior_intervals(a, b, V, delta):
    """Sub-intervals of [a, b] at distance >= delta from every vertex."""
    removed = []
    for v in V:
        tt = g.segment_circle_params(a, b, v, delta)
        if tt is not None:
            removed.append(tt)
    removed.sort()
    keep, cur = [], 0.0
    for t0, t1 in removed:
        if t0 > cur:
            keep.append((cur, t0))
        cur = max(cur, t1)
    if cur < 1.0:
        keep.append((cur, 1.0))
    return keep


def _farthest_point_centres(p, q, rho):
    """Farthest-point insertion on the segment [p, q] until gaps are <= 2 rho."""
    L = float(np.linalg.norm(q - p))
    centres = [0.0, L] if L > 0 else [0.0]
    heap = [(-L, 0.0, L)] if L > 2 * rho else []
    while heap:
        negg, s0, s1 = heapq.heappop(heap)
        mid = 0.5 * (s0 + s1)
        centres.append(mid)
        for u, w in ((s0, mid), (mid, s1)):
            if w - u > 2 * rho:
                heapq.heappush(heap, (-(w - u), u, w))
    centres = sorted(set(centres))
    return [p + (s / L) * (q - p) if L > 0 else p for s in centres]


def boundary_cover(P, r0, ratio=COVER_RATIO, certify=True):
    """Vertex balls plus edge balls covering the boundary, each star-certified."""
    if P.dimension != 2:
        raise NotImplementedError("covers are built for polygons")
    R0 = P.vertex_separation
    if r0 > R0 * (1 + 1e-12):
        raise RadiusTooLarge(f"r0={r0} exceeds R0={R0}")
    cs = P.face_constant.c_star
    q = ratio * cs
    balls = []
    for j, v in enumerate(P.vertices):
        balls.append(CoverBall(0, j, v.copy(), cs * r0, 2 * q * r0))
    delta = q * r0
    rho = q * q * r0
    a, b = P.edges
    j = 0
    for i in range(len(a)):
        for t0, t1 in _interior_intervals(a[i], b[i], P.vertices, delta):
            p0 = a[i] + t0 * (b[i] - a[i])
            p1 = a[i] + t1 * (b[i] - a[i])
            for c in _farthest_point_centres(p0, p1, rho):
                balls.append(CoverBall(1, j, np.asarray(c), q * cs * r0, 2 * rho))
                j += 1
    if certify:
        for ball in balls:
            ball.certificate = star_certificate(P, ball.center, ball.certified_radius)
    cover = StarCover(balls, float(r0), cs, ratio)
    cover.stats = {"count_level0": len(P.vertices), "count_level1": j}
    return cover


def cover_verify(P, cover, samples=100_000, recertify=True, raise_on_failure=True):
    """Sample the boundary, check coverage and certificates, report overlaps."""
    pts = P.boundary_points(samples)
    hits = np.zeros(len(pts), dtype=int)
    levels = sorted({b.level for b in cover.balls})
    for k in levels:
        lb = [b for b in cover.balls if b.level == k]
        centres = np.array([b.center for b in lb])
        radii = np.array([b.covering_radius for b in lb])
        tree = cKDTree(centres)
        rmax = float(radii.max())
        near = tree.query_ball_point(pts, rmax)
        for i, idx in enumerate(near):
            if idx:
                d = np.linalg.norm(centres[idx] - pts[i], axis=1)
                hits[i] += int(np.count_nonzero(d < np.asarray(radii)[idx]))
    gaps = np.nonzero(hits == 0)[0]
    failures = []
    if recertify:
        for i, b in enumerate(cover.balls):
            cert = star_certificate(P, b.center, b.certified_radius)
            if not cert.star_shaped:
                failures.append(i)
    report = {
        "samples": int(samples),
        "gaps": int(len(gaps)),
        "gap_witness": pts[gaps[0]].tolist() if len(gaps) else None,
        "max_multiplicity": int(hits.max()) if len(hits) else 0,
        "certificate_failures": len(failures),
        "balls": len(cover.balls),
    }
    if raise_on_failure:
        if len(gaps):
            raise CoverageGap(f"{len(gaps)} boundary samples uncovered", witness=pts[gaps[0]])
        if failures:
            raise CertificateFailure(f"{len(failures)} cover balls failed re-certification")
    return report
