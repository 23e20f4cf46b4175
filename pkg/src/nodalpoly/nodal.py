"""Nodal sets of P1 fields: extraction, exact length in regions, shells and surveys."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import _geom as g
from .errors import CertificateFailure, FlatnessViolation, ResolutionGuard
from .polytope import skeleton_distance, skeleton_distances
from .star import star_certificate

# calibration: Re(z^k) at its zero has length 2kr in B_r and N(4r) = 2k + 2,
# so the realised ratio is 2k / (2k + 3); k = 5 is the largest calibrated degree
CALIBRATION_DEGREES = (1, 2, 3, 4, 5)
RHO_MAX = 10.0 * max(2 * k / (2 * k + 3) for k in CALIBRATION_DEGREES)


@dataclass
class NodalSet:
    segments: np.ndarray  # (m, 2, 2)
    triangles: np.ndarray  # source triangle per segment
    boundary_adjacent: np.ndarray  # segment's triangle touches the boundary
    zero_triangles: np.ndarray  # all-zero triangles with an interior node
    zero_area: float
    shell: np.ndarray = None

    @property
    def lengths(self):
        return np.linalg.norm(self.segments[:, 1] - self.segments[:, 0], axis=1)

    @property
    def length(self):
        return float(self.lengths.sum())

    def __len__(self):
        return len(self.segments)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x1", "y1", "x2", "y2", "triangle", "shell"])
        shells = self.shell if self.shell is not None else np.full(len(self), -1)
        for s, t, k in zip(self.segments, self.triangles, shells):
            w.writerow([repr(float(s[0, 0])), repr(float(s[0, 1])), repr(float(s[1, 0])),
                        repr(float(s[1, 1])), int(t), int(k)])
        return buf.getvalue()


def extract_nodal_set(f):
    """Marching triangles on a P1 field, with 0 counted as positive.

    Segments lying on a boundary edge (the Dirichlet zero set) and
    zero-length segments are dropped; triangles whose three values are
    exactly zero are flagged unless all their nodes are on the boundary.
    """
    mesh = f.mesh
    tri = mesh.triangles
    v = f.values[tri]
    p = mesh.nodes[tri]
    pos = v >= 0
    npos = pos.sum(axis=1)
    mixed = np.nonzero((npos == 1) | (npos == 2))[0]
    pts = []
    for a, b in ((0, 1), (1, 2), (2, 0)):
        cut = pos[mixed, a] != pos[mixed, b]
        va, vb = v[mixed, a], v[mixed, b]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(cut, va / (va - vb), np.nan)
        pts.append(p[mixed, a] + t[:, None] * (p[mixed, b] - p[mixed, a]))
    pts = np.stack(pts, axis=1)  # (k, 3, 2) with NaN on uncut edges
    has = ~np.isnan(pts[..., 0])
    # exactly two cut edges per mixed triangle; keep them in edge order
    order = np.argsort(~has, axis=1, kind="stable")[:, :2]
    seg = np.take_along_axis(pts, order[..., None], axis=1)
    bnd = mesh.boundary[tri[mixed]]
    keep = np.linalg.norm(seg[:, 1] - seg[:, 0], axis=1) > 0.0
    # a segment joining two boundary nodes of the same triangle is a boundary edge
    for i, j in ((0, 1), (1, 2), (2, 0)):
        both = bnd[:, i] & bnd[:, j]
        on_edge = both & _on_segment(seg, p[mixed, i], p[mixed, j])
        keep &= ~on_edge
    seg, src = seg[keep], mixed[keep]
    adj = mesh.boundary[tri[src]].any(axis=1)
    allzero = np.all(v == 0.0, axis=1) & ~mesh.boundary[tri].all(axis=1)
    z = np.nonzero(allzero)[0]
    return NodalSet(seg, src, adj, z, float(mesh.areas[z].sum()))


def _on_segment(seg, a, b):
    ab = b - a
    L2 = np.einsum("ij,ij->i", ab, ab)
    out = np.ones(len(seg), dtype=bool)
    for k in range(2):
        w = seg[:, k] - a
        cr = np.abs(g.cross2(ab, w)) / np.sqrt(L2)
        t = np.einsum("ij,ij->i", w, ab) / L2
        out &= (cr <= 1e-12 * np.sqrt(L2)) & (t >= -1e-12) & (t <= 1 + 1e-12)
    return out


# ------------------------------------------------------------ regions


def _circle_params(a, b, centers, radii):
    """Parameters in (0, 1) where segments a->b cross circles; shape (m, 2k)."""
    d = b - a
    A = np.einsum("ij,ij->i", d, d)[:, None]
    f = a[:, None, :] - centers[None]
    B = 2 * np.einsum("mkd,md->mk", f, d)
    C = np.einsum("mkd,mkd->mk", f, f) - np.asarray(radii)[None] ** 2
    disc = B * B - 4 * A * C
    sq = np.sqrt(np.where(disc > 0, disc, np.nan))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.concatenate([(-B - sq) / (2 * A), (-B + sq) / (2 * A)], axis=1)
    return t


def _line_params(a, b, p0, p1, offset):
    """Parameters where segments cross the two lines parallel to p0p1 at ±offset."""
    d = b - a
    n = np.array([p1[1] - p0[1], p0[0] - p1[0]]) / np.linalg.norm(p1 - p0)
    sa = (a - p0) @ n
    sd = d @ n
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.stack([(offset - sa) / sd, (-offset - sa) / sd], axis=1)


class Region:
    def breakpoints(self, a, b):
        raise NotImplementedError

    def contains(self, pts):
        raise NotImplementedError

    def __and__(self, other):
        return Intersection(self, other)

    def __invert__(self):
        return Complement(self)


class Everywhere(Region):
    def breakpoints(self, a, b):
        return np.zeros((len(a), 0))

    def contains(self, pts):
        return np.ones(len(pts), dtype=bool)


class Ball(Region):
    """Closed disk."""

    def __init__(self, center, r):
        self.center = np.asarray(center, dtype=float)[:2]
        self.r = float(r)

    def breakpoints(self, a, b):
        return _circle_params(a, b, self.center[None], [self.r])

    def contains(self, pts):
        return np.linalg.norm(pts - self.center, axis=1) <= self.r


class VertexShell(Region):
    """{lo < d(y, vertices) <= hi}: a dyadic shell around the vertex skeleton."""

    def __init__(self, P, lo, hi):
        self.V = P.vertices
        self.lo, self.hi = float(lo), float(hi)

    def breakpoints(self, a, b):
        k = len(self.V)
        return np.concatenate([_circle_params(a, b, self.V, [self.lo] * k),
                               _circle_params(a, b, self.V, [self.hi] * k)], axis=1)

    def contains(self, pts):
        d = np.min(np.linalg.norm(pts[:, None] - self.V[None], axis=2), axis=1)
        return (d > self.lo) & (d <= self.hi)


class BoundaryLayer(Region):
    """P_δ = {y in P : d(y, ∂P) < δ}."""

    def __init__(self, P, delta):
        self.a, self.b = P.edges
        self.delta = float(delta)

    def breakpoints(self, a, b):
        parts = [_circle_params(a, b, self.a, [self.delta] * len(self.a))]
        for p0, p1 in zip(self.a, self.b):
            parts.append(_line_params(a, b, p0, p1, self.delta))
        return np.concatenate(parts, axis=1)

    def contains(self, pts):
        return g.points_to_segments(pts, self.a, self.b).min(axis=1) < self.delta


class Intersection(Region):
    def __init__(self, *regions):
        self.regions = regions

    def breakpoints(self, a, b):
        return np.concatenate([r.breakpoints(a, b) for r in self.regions], axis=1)

    def contains(self, pts):
        out = np.ones(len(pts), dtype=bool)
        for r in self.regions:
            out &= r.contains(pts)
        return out


class Complement(Region):
    def __init__(self, region):
        self.region = region

    def breakpoints(self, a, b):
        return self.region.breakpoints(a, b)

    def contains(self, pts):
        return ~self.region.contains(pts)


def segment_lengths_in(segments, region):
    """Exact length of each segment inside ``region`` (breakpoints + midpoint test)."""
    if region is None:
        region = Everywhere()
    a, b = segments[:, 0], segments[:, 1]
    t = region.breakpoints(a, b)
    t = np.where(np.isfinite(t) & (t > 0) & (t < 1), t, np.nan)
    t = np.concatenate([np.zeros((len(a), 1)), t, np.ones((len(a), 1))], axis=1)
    t = np.sort(t, axis=1)  # NaNs sort last
    t = np.where(np.isnan(t), 1.0, t)
    lo, hi = t[:, :-1], t[:, 1:]
    mid = 0.5 * (lo + hi)
    m, k = mid.shape
    pts = a[:, None] + mid[..., None] * (b - a)[:, None]
    inside = region.contains(pts.reshape(-1, 2)).reshape(m, k)
    L = np.linalg.norm(b - a, axis=1)
    return L * np.sum((hi - lo) * inside, axis=1)


def nodal_measure(z, region=None):
    """Total nodal length, optionally restricted to a region."""
    if region is None:
        return z.length
    if not len(z):
        return 0.0
    return float(segment_lengths_in(z.segments, region).sum())


# ------------------------------------------------------------ flat bound


@dataclass
class FlatBoundReport:
    center: np.ndarray
    r: float
    length: float
    N: float
    rho: float
    rho_max: float

    @property
    def holds(self):
        return self.rho <= self.rho_max

    def as_dict(self):
        return dict(self.__dict__, center=np.asarray(self.center).tolist(), holds=self.holds)


def local_flat_bound_check(P, x, r, length, N, rho_max=RHO_MAX):
    """ρ = length(Z ∩ B_r) / ((N(x, 4r) + 1) r) for a ball with flat surroundings.

    ``length`` is the nodal length in B_r(x) and ``N`` the doubling index at
    radius 4r.  The ball B_{8r}(x) must keep away from every vertex.
    """
    x = np.asarray(x, dtype=float)
    d = skeleton_distance(P, x, P.dimension - 2)
    if d < 8 * r:
        raise FlatnessViolation(f"B(x, 8r) reaches a vertex: d={d:.6g} < 8r={8 * r:.6g}")
    rho = float(length / ((N + 1) * r ** (P.dimension - 1)))
    return FlatBoundReport(x, float(r), float(length), float(N), rho, float(rho_max))


def flat_bound_for_field(f, P, x, r, z=None, rho_max=RHO_MAX):
    """Flat-bound check on a P1 field: nodal length from extraction, N from exact integrals."""
    from .doubling import doubling

    z = extract_nodal_set(f) if z is None else z
    length = nodal_measure(z, Ball(x, r))
    N = doubling(f, P, x, 4 * r)
    return local_flat_bound_check(P, x, r, length, N, rho_max)


# ------------------------------------------------------------ shells


@dataclass
class ShellDecomposition:
    center: np.ndarray
    r0: float
    K: int
    lengths: np.ndarray
    ball_counts: np.ndarray
    constants: np.ndarray  # ℓ_k / ((N + 1) 2^{-k} r0)
    unresolved: float
    ball_length: float
    N: float

    @property
    def total(self):
        return float(self.lengths.sum())

    def as_dict(self):
        return {
            "center": np.asarray(self.center).tolist(),
            "r0": self.r0,
            "K_max": self.K,
            "lengths": self.lengths.tolist(),
            "ball_counts": self.ball_counts.tolist(),
            "constants": self.constants.tolist(),
            "unresolved_length": self.unresolved,
            "ball_length": self.ball_length,
            "N": self.N,
        }


def _greedy_cover_count(samples, radius):
    if not len(samples):
        return 0
    tree = cKDTree(samples)
    covered = np.zeros(len(samples), dtype=bool)
    count = 0
    for i in range(len(samples)):
        if covered[i]:
            continue
        count += 1
        covered[tree.query_ball_point(samples[i], radius)] = True
    return count


def shell_accounting(P, f, center, r0, N=None, h=None, c1=1.0, z=None):
    """Dyadic shells around the vertex skeleton inside B(center, r0/8).

    Shells stop once 2^{-k} r0 drops below 4h; the nodal length closer to the
    vertices than that is reported as unresolved.
    """
    from .doubling import doubling

    center = np.asarray(center, dtype=float)
    cert = star_certificate(P, center, r0)
    if not (cert.star_shaped and cert.n_components == 1):
        raise CertificateFailure("B(center, r0) ∩ P is not star-shaped", cert)
    h = f.mesh.h if h is None else h
    z = extract_nodal_set(f) if z is None else z
    if N is None:
        N = doubling(f, P, center, r0 / 2)
    base = Ball(center, r0 / 8)
    K = max(1, int(math.floor(math.log2(r0 / (4 * h)))))
    lengths, counts = [], []
    shell_id = np.full(len(z), -1)
    mids = 0.5 * (z.segments[:, 0] + z.segments[:, 1]) if len(z) else np.zeros((0, 2))
    dmid = skeleton_distances(P, mids, 0) if len(z) else np.zeros(0)
    dmid = np.where(base.contains(mids), dmid, np.nan)
    for k in range(1, K + 1):
        lo, hi = 2.0 ** -k * r0, 2.0 ** (-k + 1) * r0
        region = base & VertexShell(P, lo, hi)
        lengths.append(nodal_measure(z, region) if len(z) else 0.0)
        shell_id[(dmid > lo) & (dmid <= hi)] = k
        # cover E_k ∩ B(r0/8) by balls of radius c1 2^{-k-5} r0 centred in E_k
        rad = c1 * 2.0 ** (-k - 5) * r0
        step = rad / 2
        gx = np.arange(-hi, hi + step, step)
        X, Y = np.meshgrid(gx, gx)
        grid = np.stack([X.ravel(), Y.ravel()], axis=1)
        near = P.vertices[np.linalg.norm(P.vertices - center, axis=1) <= r0 / 8 + hi]
        cand = np.concatenate([grid + v for v in near]) if len(near) else np.zeros((0, 2))
        if len(cand):
            cand = cand[P.contains(cand)]
            cand = cand[region.contains(cand)]
        counts.append(_greedy_cover_count(cand, rad))
    lengths = np.array(lengths)
    ball_len = nodal_measure(z, base) if len(z) else 0.0
    inner = base & VertexShell(P, -1.0, 2.0 ** -K * r0)
    unresolved = nodal_measure(z, inner) if len(z) else 0.0
    consts = lengths / ((N + 1) * 2.0 ** -np.arange(1, K + 1) * r0 ** (P.dimension - 1))
    z.shell = shell_id
    return ShellDecomposition(center, float(r0), K, lengths, np.array(counts), consts,
                              float(unresolved), float(ball_len), float(N))


# ------------------------------------------------------------ survey


@dataclass
class ScalingSurvey:
    rows: list
    max_ratio: float
    slope: float
    cluster_max: dict = field(default_factory=dict)

    def as_dict(self):
        return {"rows": self.rows, "max_ratio": self.max_ratio, "slope": self.slope,
                "cluster_max": {str(k): v for k, v in self.cluster_max.items()}}

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "lambda", "length", "ratio", "cluster"])
        for r in self.rows:
            w.writerow([r["k"], repr(r["lambda"]), repr(r["length"]), repr(r["ratio"]), r["cluster"]])
        return buf.getvalue()


def resolution_guard(pairs, h, limit=0.5):
    lam = max(p.value for p in pairs)
    if lam * h * h > limit:
        raise ResolutionGuard(f"lambda_max h^2 = {lam * h * h:.3f} exceeds {limit}")


def trend_slope(lam, ratio, skip=1):
    """Least-squares slope of log(ratio) against log(λ), ignoring the first ``skip`` entries."""
    lam, ratio = np.asarray(lam, float)[skip:], np.asarray(ratio, float)[skip:]
    ok = ratio > 0
    if ok.sum() < 2:
        return 0.0
    return float(np.polyfit(np.log(lam[ok]), np.log(ratio[ok]), 1)[0])


def yau_upper_survey(P, pairs, min_pairs=10, skip=1):
    """Nodal length over √λ for each computed eigenpair."""
    if len(pairs) < min_pairs:
        raise ValueError(f"at least {min_pairs} eigenpairs are required")
    resolution_guard(pairs, pairs[0].mesh.h)
    rows = []
    for p in pairs:
        L = extract_nodal_set(p.field).length
        rows.append({"k": p.index + 1, "lambda": p.value, "length": L,
                     "ratio": L / math.sqrt(p.value), "cluster": p.cluster})
    ratios = [r["ratio"] for r in rows]
    cmax = {}
    for r in rows:
        cmax[r["cluster"]] = max(cmax.get(r["cluster"], 0.0), r["ratio"])
    slope = trend_slope([r["lambda"] for r in rows], ratios, skip)
    return ScalingSurvey(rows, float(max(ratios)), slope, cmax)
