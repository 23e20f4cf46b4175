"""Bounded polytopes, their face lattice and skeleton distances.

Planar polygons are given by their boundary vertex cycle; polyhedra by a
vertex array plus facet incidence lists.  Everything is immutable after
construction and every query is a pure function of the polytope.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import _geom as g
from .errors import (
    ChartMiss,
    DegenerateFacet,
    NonSimpleBoundary,
    OpenBoundary,
    PointOutsideDomain,
)

REL_TOL = 1e-12


@dataclass(frozen=True)
class Facet:
    """An (n-1)-face: supporting hyperplane ``normal . y = offset``."""

    normal: np.ndarray
    offset: float
    vertices: tuple


@dataclass(frozen=True)
class Face:
    dim: int
    vertices: tuple
    facets: tuple  # indices of the facets containing this face
    boundary: tuple = ()  # indices into the (dim-1)-level of the lattice


@dataclass(frozen=True)
class FaceLattice:
    levels: tuple  # levels[k] is the tuple of k-faces

    def __getitem__(self, k):
        return self.levels[k]

    def counts(self):
        return [len(level) for level in self.levels]


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


class Polytope:
    """Validated bounded polytope in dimension 2 or 3.

    Use :func:`build_polytope` (or :meth:`from_json`) rather than calling the
    constructor directly.
    """

    def __init__(self, dimension, vertices, facets, adjacency, witness):
        self.dimension = int(dimension)
        self.vertices = _readonly(vertices)
        self.facets = tuple(facets)
        self.adjacency = tuple(tuple(a) for a in adjacency)
        self.witness = _readonly(witness)
        diffs = self.vertices[:, None, :] - self.vertices[None, :, :]
        self.diam = float(np.max(np.linalg.norm(diffs, axis=-1)))
        self.tol = REL_TOL * self.diam

    # ------------------------------------------------------------ basic data
    def __repr__(self):
        return f"Polytope(n={self.dimension}, vertices={len(self.vertices)}, facets={len(self.facets)})"

    @property
    def n_vertices(self):
        return len(self.vertices)

    @cached_property
    def edges(self):
        """Edge endpoint arrays ``(a, b)`` of shape (m, n)."""
        lat = self.lattice
        idx = np.array([f.vertices for f in lat[1]], dtype=int)
        return self.vertices[idx[:, 0]], self.vertices[idx[:, 1]]

    @cached_property
    def lattice(self):
        return face_lattice(self)

    @cached_property
    def fingerprint(self):
        payload = self.to_dict()
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def to_dict(self):
        d = {"dimension": self.dimension, "vertices": self.vertices.tolist()}
        if self.dimension == 3:
            d["facets"] = [list(f.vertices) for f in self.facets]
        return d

    @classmethod
    def from_json(cls, path_or_text):
        return load_polytope(path_or_text)

    # ------------------------------------------------------------- queries
    @cached_property
    def reflex_vertices(self):
        """Indices of planar vertices with interior angle above pi."""
        if self.dimension != 2:
            return ()
        v = self.vertices
        out = []
        for i in range(len(v)):
            a, b, c = v[i - 1], v[i], v[(i + 1) % len(v)]
            if g.cross2(b - a, c - b) < 0:
                out.append(i)
        return tuple(out)

    def interior_angles(self):
        v = self.vertices
        m = len(v)
        angles = np.empty(m)
        for i in range(m):
            a, b, c = v[i - 1], v[i], v[(i + 1) % m]
            u1, u2 = a - b, c - b
            ang = math.atan2(g.cross2(u2, u1), float(np.dot(u1, u2)))
            angles[i] = ang % (2 * math.pi)
        return angles

    def contains(self, points, tol=None):
        """Membership in the closed polytope, boundary within ``tol``."""
        tol = self.tol * 10 if tol is None else tol
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.dimension == 2:
            inside = g.points_in_polygon(pts, self.vertices)
            a, b = self.edges
            near = g.points_to_segments(pts, a, b).min(axis=1) <= tol
            return inside | near
        out = np.empty(len(pts), dtype=bool)
        for i, p in enumerate(pts):
            if boundary_distance(self, p) <= tol:
                out[i] = True
            else:
                out[i] = abs(self._winding3(p)) > 0.5
        return out

    def _winding3(self, p):
        total = 0.0
        for f in self.facets:
            poly = self.vertices[list(f.vertices)]
            for j in range(1, len(poly) - 1):
                total += g.solid_angle(p, poly[0], poly[j], poly[j + 1])
        return total / (4 * math.pi)

    def boundary_distance(self, x):
        return boundary_distance(self, x)

    def boundary_points(self, count, offset=0.5):
        """``count`` equally spaced points along a planar boundary."""
        if self.dimension != 2:
            raise NotImplementedError("boundary sampling is planar only")
        a, b = self.edges
        lens = np.linalg.norm(b - a, axis=1)
        cum = np.concatenate([[0.0], np.cumsum(lens)])
        s = (np.arange(count) + offset) * cum[-1] / count
        k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(lens) - 1)
        t = (s - cum[k]) / lens[k]
        return a[k] + t[:, None] * (b[k] - a[k])

    @cached_property
    def face_constant(self):
        return face_distance_constant(self)

    @cached_property
    def vertex_separation(self):
        """Smallest distance from a vertex to a facet not containing it."""
        best = math.inf
        for i, vf in enumerate(self.lattice[0]):
            x = self.vertices[i]
            for gi, G in enumerate(self.lattice[self.dimension - 1]):
                if gi in vf.facets:
                    continue
                best = min(best, point_face_distance(self, x, G))
        return best

    @property
    def perimeter(self):
        a, b = self.edges
        return float(np.linalg.norm(b - a, axis=1).sum())

    @property
    def area(self):
        if self.dimension != 2:
            raise NotImplementedError
        return abs(g.signed_area(self.vertices))


# --------------------------------------------------------------- building


def build_polytope(spec=None, *, dimension=None, vertices=None, facets=None):
    """Validate a polygon (vertex cycle) or polyhedron (vertices + facets).

    ``spec`` may be a mapping in the JSON layout ``{"dimension", "vertices",
    "facets"}``; keyword arguments override it.  Planar input may be given in
    either orientation; it is stored counter-clockwise.
    """
    spec = dict(spec or {})
    if dimension is not None:
        spec["dimension"] = dimension
    if vertices is not None:
        spec["vertices"] = vertices
    if facets is not None:
        spec["facets"] = facets
    verts = np.asarray(spec.get("vertices", []), dtype=float)
    dim = int(spec.get("dimension", verts.shape[1] if verts.ndim == 2 else 2))
    if verts.ndim != 2 or verts.shape[1] != dim:
        raise OpenBoundary(f"vertex array must have shape (m, {dim})")
    if not np.all(np.isfinite(verts)):
        raise DegenerateFacet("non-finite vertex coordinate")
    if dim == 2:
        return _build_polygon(verts)
    if dim == 3:
        if "facets" not in spec:
            raise OpenBoundary("polyhedra need facet incidence lists")
        return _build_polyhedron(verts, [list(map(int, f)) for f in spec["facets"]])
    raise NotImplementedError("only dimensions 2 and 3 are supported")


def _build_polygon(verts):
    m = len(verts)
    if m < 3:
        raise OpenBoundary("a polygon needs at least three vertices")
    scale = float(np.max(np.linalg.norm(verts[:, None] - verts[None], axis=-1)))
    if scale <= 0:
        raise DegenerateFacet("all vertices coincide")
    tol = REL_TOL * scale
    nxt = np.roll(verts, -1, axis=0)
    lens = np.linalg.norm(nxt - verts, axis=1)
    if np.any(lens <= tol):
        i = int(np.argmin(lens))
        raise DegenerateFacet(f"edge {i} has zero length (repeated vertex)")
    if g.signed_area(verts) < 0:
        verts = verts[::-1].copy()
        nxt = np.roll(verts, -1, axis=0)
    for i in range(m):
        a, b, c = verts[i - 1], verts[i], verts[(i + 1) % m]
        u, w = b - a, c - b
        if abs(g.cross2(u, w)) <= tol * (np.linalg.norm(u) + np.linalg.norm(w)):
            if np.dot(u, w) > 0:
                raise DegenerateFacet(f"vertex {i} is collinear with its neighbours")
            raise NonSimpleBoundary(f"boundary folds back at vertex {i}")
    for i in range(m):
        for j in range(i + 2, m):
            if i == 0 and j == m - 1:
                continue  # adjacent through the closing vertex
            if g.segments_intersect(verts[i], nxt[i], verts[j], nxt[j], tol):
                raise NonSimpleBoundary(f"edges {i} and {j} intersect")
    facets = []
    for i in range(m):
        d = nxt[i] - verts[i]
        nrm = np.array([d[1], -d[0]]) / np.linalg.norm(d)
        facets.append(Facet(_readonly(nrm), float(nrm @ verts[i]), (i, (i + 1) % m)))
    adjacency = [((i - 1) % m, (i + 1) % m) for i in range(m)]
    witness = _interior_witness_2d(verts, facets)
    return Polytope(2, verts, facets, adjacency, witness)


def _interior_witness_2d(verts, facets):
    scale = float(np.max(np.ptp(verts, axis=0)))
    a = verts
    b = np.roll(verts, -1, axis=0)
    for i, f in enumerate(facets):
        mid = 0.5 * (a[i] + b[i])
        for eps in (1e-3, 1e-5, 1e-7):
            p = mid - eps * scale * f.normal
            if g.points_in_polygon(p[None], verts)[0]:
                return p
    raise DegenerateFacet("could not locate an interior point")


def _newell_normal(poly):
    nrm = np.zeros(3)
    k = len(poly)
    for i in range(k):
        cur, nx = poly[i], poly[(i + 1) % k]
        nrm[0] += (cur[1] - nx[1]) * (cur[2] + nx[2])
        nrm[1] += (cur[2] - nx[2]) * (cur[0] + nx[0])
        nrm[2] += (cur[0] - nx[0]) * (cur[1] + nx[1])
    return nrm


def _build_polyhedron(verts, facet_lists):
    scale = float(np.max(np.linalg.norm(verts[:, None] - verts[None], axis=-1)))
    tol = REL_TOL * max(scale, 1e-300)
    if len(facet_lists) < 4:
        raise OpenBoundary("a polyhedron needs at least four facets")
    edge_use = {}
    for fi, fl in enumerate(facet_lists):
        if len(fl) < 3 or len(set(fl)) != len(fl):
            raise DegenerateFacet(f"facet {fi} has repeated or too few vertices")
        for j in range(len(fl)):
            key = tuple(sorted((fl[j], fl[(j + 1) % len(fl)])))
            edge_use.setdefault(key, []).append((fi, fl[j], fl[(j + 1) % len(fl)]))
    for key, uses in edge_use.items():
        if len(uses) != 2:
            raise OpenBoundary(f"edge {key} belongs to {len(uses)} facets")
    # consistent orientation by flood fill over shared edges
    flip = [None] * len(facet_lists)
    flip[0] = False
    stack = [0]
    neighbours = {i: [] for i in range(len(facet_lists))}
    for uses in edge_use.values():
        (f1, a1, b1), (f2, a2, b2) = uses
        same_dir = (a1 == a2 and b1 == b2)
        neighbours[f1].append((f2, same_dir))
        neighbours[f2].append((f1, same_dir))
    while stack:
        f = stack.pop()
        for nb, same_dir in neighbours[f]:
            want = (not flip[f]) if same_dir else flip[f]
            if flip[nb] is None:
                flip[nb] = want
                stack.append(nb)
            elif flip[nb] != want:
                raise NonSimpleBoundary("facets cannot be oriented consistently")
    if any(fl is None for fl in flip):
        raise OpenBoundary("facet graph is disconnected")
    oriented = [fl[::-1] if fp else list(fl) for fl, fp in zip(facet_lists, flip)]
    volume = 0.0
    for fl in oriented:
        p = verts[fl]
        for j in range(1, len(p) - 1):
            volume += np.dot(p[0], np.cross(p[j], p[j + 1])) / 6.0
    if abs(volume) <= tol * scale * scale:
        raise DegenerateFacet("polyhedron has zero volume")
    if volume < 0:
        oriented = [fl[::-1] for fl in oriented]
    facets = []
    for fi, fl in enumerate(oriented):
        p = verts[fl]
        nrm = _newell_normal(p)
        area = 0.5 * np.linalg.norm(nrm)
        if area <= tol * scale:
            raise DegenerateFacet(f"facet {fi} has zero area")
        nrm /= np.linalg.norm(nrm)
        off = float(np.mean(p @ nrm))
        if np.max(np.abs(p @ nrm - off)) > tol:
            raise DegenerateFacet(f"facet {fi} is not planar")
        facets.append(Facet(_readonly(nrm), off, tuple(fl)))
    adjacency = [sorted({nb for nb, _ in neighbours[i]}) for i in range(len(facets))]
    f0 = facets[0]
    c0 = verts[list(f0.vertices)].mean(axis=0)
    witness = None
    proto = Polytope(3, verts, facets, adjacency, c0)
    for eps in (1e-3, 1e-5, 1e-7):
        p = c0 - eps * scale * f0.normal
        if abs(proto._winding3(p)) > 0.5:
            witness = p
            break
    if witness is None:
        raise DegenerateFacet("could not locate an interior point")
    return Polytope(3, verts, facets, adjacency, witness)


def load_polytope(source):
    """Parse the polytope JSON layout from a path, JSON text or mapping."""
    if isinstance(source, dict):
        return build_polytope(source)
    text = str(source)
    p = Path(text)
    if not text.lstrip().startswith("{") and p.exists():
        text = p.read_text()
    data = json.loads(text)
    return build_polytope(data)


# ------------------------------------------------------------ face lattice


def face_lattice(P):
    """Enumerate the k-faces of ``P`` for k = 0..n-1."""
    if P.dimension == 2:
        m = P.n_vertices
        verts = tuple(Face(0, (i,), ((i - 1) % m, i)) for i in range(m))
        edges = tuple(Face(1, (i, (i + 1) % m), (i,), (i, (i + 1) % m)) for i in range(m))
        return FaceLattice((verts, edges))
    # polyhedron: vertices, edges, facets
    edge_index = {}
    edge_facets = {}
    for fi, f in enumerate(P.facets):
        fl = f.vertices
        for j in range(len(fl)):
            key = tuple(sorted((fl[j], fl[(j + 1) % len(fl)])))
            edge_facets.setdefault(key, []).append(fi)
    for key in sorted(edge_facets):
        edge_index[key] = len(edge_index)
    vert_facets = {i: [] for i in range(P.n_vertices)}
    for fi, f in enumerate(P.facets):
        for v in f.vertices:
            vert_facets[v].append(fi)
    verts = tuple(Face(0, (i,), tuple(sorted(vert_facets[i]))) for i in range(P.n_vertices))
    edges = tuple(
        Face(1, key, tuple(sorted(edge_facets[key])), key) for key in sorted(edge_facets)
    )
    facets = []
    for fi, f in enumerate(P.facets):
        fl = f.vertices
        bnd = tuple(
            edge_index[tuple(sorted((fl[j], fl[(j + 1) % len(fl)])))] for j in range(len(fl))
        )
        facets.append(Face(2, tuple(fl), (fi,), bnd))
    return FaceLattice((verts, edges, tuple(facets)))


def face_points(P, face):
    return P.vertices[list(face.vertices)]


def point_face_distance(P, x, face):
    """Euclidean distance from ``x`` to the (closed, convex) face."""
    pts = face_points(P, face)
    if face.dim == 0:
        return float(np.linalg.norm(x - pts[0]))
    if face.dim == 1:
        return float(g.point_segment_distance(x, pts[0], pts[1]))
    fi = face.facets[0]
    return g.point_polygon3_distance(np.asarray(x, float), pts, P.facets[fi].normal)


def boundary_distance(P, x):
    x = np.asarray(x, dtype=float)
    if P.dimension == 2:
        a, b = P.edges
        return float(g.points_to_segments(x, a, b).min())
    return min(point_face_distance(P, x, f) for f in P.lattice[2])


def skeleton_distance(P, x, k, within=None, check=True):
    """Distance from ``x`` to the union of all k-faces.

    With ``within`` set, faces farther than that radius are ignored and
    ``inf`` is returned if none remain (an empty skeleton patch).
    """
    x = np.asarray(x, dtype=float)
    if not 0 <= k <= P.dimension - 1:
        raise ValueError(f"k must lie in 0..{P.dimension - 1}")
    if check and not P.contains(x)[0]:
        raise PointOutsideDomain(f"{x.tolist()} is outside the polytope")
    if P.dimension == 2:
        if k == 0:
            d = float(np.linalg.norm(P.vertices - x, axis=1).min())
        else:
            a, b = P.edges
            d = float(g.points_to_segments(x, a, b).min())
    else:
        d = min(point_face_distance(P, x, f) for f in P.lattice[k])
    if within is not None and d >= within:
        return math.inf
    return d


def skeleton_distances(P, points, k):
    """Vectorised planar variant of :func:`skeleton_distance` (no checks)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if P.dimension != 2:
        return np.array([skeleton_distance(P, p, k, check=False) for p in pts])
    if k == 0:
        return np.linalg.norm(pts[:, None, :] - P.vertices[None], axis=-1).min(axis=1)
    a, b = P.edges
    return g.points_to_segments(pts, a, b).min(axis=1)


# ------------------------------------------------- face-separation constant


@dataclass
class FaceConstant:
    c_star: float
    c_prime: float
    c_double_prime: float
    diam: float
    pairs: list = field(default_factory=list)  # (dimF, idxF, idxG, value, kind)

    def as_dict(self):
        return {
            "c_star": self.c_star,
            "c_prime": self.c_prime,
            "c_double_prime": self.c_double_prime,
            "diam": self.diam,
        }


def _ray_limit_2d(direction, g0, g1, apex):
    """lim d(apex + s*direction, [g0,g1]) / s as s -> 0+, for apex on G."""
    other = g1 if np.allclose(g0, apex) else g0
    gdir = other - apex
    gdir = gdir / np.linalg.norm(gdir)
    cosang = float(np.dot(direction, gdir))
    if cosang <= 0.0:
        return 1.0
    return math.sqrt(max(0.0, 1.0 - cosang * cosang))


def _wedge_distance(delta, apex_dirs, normal):
    """Distance from unit vector ``delta`` to a planar convex wedge cone."""
    d1, d2 = apex_dirs
    proj = delta - np.dot(delta, normal) * normal
    # proj inside the wedge iff it is a nonnegative combination of d1, d2
    M = np.stack([d1, d2], axis=1)
    coef, *_ = np.linalg.lstsq(M, proj, rcond=None)
    if np.all(coef >= -1e-14):
        return abs(float(np.dot(delta, normal)))
    best = 1.0
    for d in (d1, d2):
        t = max(0.0, float(np.dot(delta, d)))
        best = min(best, float(np.linalg.norm(delta - t * d)))
    return best


def _facet_wedge(P, fi, v):
    fl = list(P.facets[fi].vertices)
    j = fl.index(v)
    a = P.vertices[fl[j - 1]] - P.vertices[v]
    b = P.vertices[fl[(j + 1) % len(fl)]] - P.vertices[v]
    return a / np.linalg.norm(a), b / np.linalg.norm(b)


def _wedge_to_wedge(wF, nF, wG, nG, samples=4096):
    d1, d2 = wF
    ang = math.atan2(float(np.dot(np.cross(d1, d2), nF)), float(np.dot(d1, d2)))
    if ang < 0:
        ang += 2 * math.pi
    e2 = np.cross(nF, d1)
    best = 1.0
    for th in np.linspace(0.0, ang, samples):
        delta = math.cos(th) * d1 + math.sin(th) * e2
        best = min(best, _wedge_distance(delta, wG, nG))
    return best


def face_distance_constant(P):
    """Face-separation constant with its two ingredients.

    ``c' `` is the smallest angular ratio over touching pairs (a face F of
    dimension >= 1 meeting a facet G that does not contain it); ``c''`` is
    the smallest distance between disjoint such pairs.  Vertices are left out
    because their relative boundary is empty.
    """
    lat = P.lattice
    n = P.dimension
    pairs = []
    c1 = math.inf
    c2 = math.inf
    facet_faces = lat[n - 1]
    for k in range(1, n):
        for fi, F in enumerate(lat[k]):
            Fset = set(F.vertices)
            for gi, G in enumerate(facet_faces):
                if gi in F.facets:
                    continue  # F is contained in G
                shared = Fset & set(G.vertices)
                if shared:
                    val = _touching_ratio(P, k, F, gi, G, shared)
                    pairs.append((k, fi, gi, val, "touching"))
                    c1 = min(c1, val)
                else:
                    val = _disjoint_distance(P, k, F, G, gi)
                    pairs.append((k, fi, gi, val, "disjoint"))
                    c2 = min(c2, val)
    c_star = min(c1, c2 / P.diam)
    return FaceConstant(c_star, c1, c2, P.diam, pairs)


def _touching_ratio(P, k, F, gi, G, shared):
    V = P.vertices
    if P.dimension == 2:
        # edges meet at a single vertex v
        v = next(iter(shared))
        other = F.vertices[1] if F.vertices[0] == v else F.vertices[0]
        d = V[other] - V[v]
        d = d / np.linalg.norm(d)
        return _ray_limit_2d(d, V[G.vertices[0]], V[G.vertices[1]], V[v])
    nG = P.facets[gi].normal
    if k == 1:
        v = next(iter(shared))
        other = F.vertices[1] if F.vertices[0] == v else F.vertices[0]
        d = V[other] - V[v]
        d = d / np.linalg.norm(d)
        return _wedge_distance(d, _facet_wedge(P, gi, v), nG)
    fF = F.facets[0]
    nF = P.facets[fF].normal
    vals = []
    if len(shared) >= 2:
        # common edge: ratio of the two half-planes near its relative interior
        a, b = sorted(shared)[:2]
        e = V[b] - V[a]
        e /= np.linalg.norm(e)
        wF = np.cross(nF, e)
        cF = V[list(F.vertices)].mean(axis=0)
        if np.dot(cF - V[a], wF) < 0:
            wF = -wF
        vals.append(_wedge_distance(wF, _facet_wedge(P, gi, a), nG))
    for v in shared:
        vals.append(_wedge_to_wedge(_facet_wedge(P, fF, v), nF, _facet_wedge(P, gi, v), nG))
    # directions running along the common edge stay inside G; exclude those
    positive = [x for x in vals if x > 1e-9]
    return min(positive) if positive else 0.0


def _disjoint_distance(P, k, F, G, gi):
    V = P.vertices
    if P.dimension == 2:
        return g.segment_segment_distance(
            V[F.vertices[0]], V[F.vertices[1]], V[G.vertices[0]], V[G.vertices[1]]
        )
    Gpoly = V[list(G.vertices)]
    nG = P.facets[gi].normal
    if k == 1:
        return g.segment_polygon3_distance(V[F.vertices[0]], V[F.vertices[1]], Gpoly, nG)
    Fpoly = V[list(F.vertices)]
    nF = P.facets[F.facets[0]].normal
    best = math.inf
    for j in range(len(Fpoly)):
        best = min(best, g.segment_polygon3_distance(Fpoly[j], Fpoly[(j + 1) % len(Fpoly)], Gpoly, nG))
    for j in range(len(Gpoly)):
        best = min(best, g.segment_polygon3_distance(Gpoly[j], Gpoly[(j + 1) % len(Gpoly)], Fpoly, nF))
    return best


def sampled_face_constant(P, resolution=1e-4):
    """Brute-force estimate of the touching-pair ratio ``c'`` (planar only).

    Samples every edge at spacing ``resolution * length`` and evaluates the
    ratio d(x, G) / d(x, dF) directly.
    """
    if P.dimension != 2:
        raise NotImplementedError("sampling oracle is planar only")
    V = P.vertices
    lat = P.lattice
    best = math.inf
    m = int(round(1.0 / resolution))
    t = (np.arange(1, m) / m)[:, None]
    for F in lat[1]:
        a, b = V[F.vertices[0]], V[F.vertices[1]]
        xs = a + t * (b - a)
        dbd = np.minimum(np.linalg.norm(xs - a, axis=1), np.linalg.norm(xs - b, axis=1))
        for gi, G in enumerate(lat[1]):
            if gi in F.facets or not set(F.vertices) & set(G.vertices):
                continue
            dG = g.point_segment_distance(xs, V[G.vertices[0]], V[G.vertices[1]])
            best = min(best, float(np.min(dG / dbd)))
    return best


# ------------------------------------------------------------- local charts


@dataclass(frozen=True)
class ChartFrame:
    """Local graph chart: boundary is a graph over the plane orthogonal to ``up``."""

    origin: np.ndarray
    up: np.ndarray
    radius: float


def lipschitz_constant(P):
    """Largest graph slope over vertex-bisector charts of a polygon."""
    if P.dimension != 2:
        raise NotImplementedError
    angles = P.interior_angles()
    slopes = [abs(1.0 / math.tan(a / 2.0)) for a in angles]
    return float(max(slopes))


def chart_frame(P, point, radius=None):
    """Chart at a boundary point of a polygon: inward normal or vertex bisector."""
    if P.dimension != 2:
        raise NotImplementedError
    x = np.asarray(point, dtype=float)
    V = P.vertices
    dv = np.linalg.norm(V - x, axis=1)
    iv = int(np.argmin(dv))
    if dv[iv] <= P.tol * 10:
        fa, fb = P.lattice[0][iv].facets
        up = -(P.facets[fa].normal + P.facets[fb].normal)
        nrm = np.linalg.norm(up)
        if nrm <= 1e-12:
            raise ChartMiss("straight vertex has no bisector chart")
        up = up / nrm
        if iv in P.reflex_vertices:
            up = -up if np.dot(up, -P.facets[fa].normal) < 0 else up
        x = V[iv].copy()
        others = [j for j in range(len(P.facets)) if j not in (fa, fb)]
    else:
        a, b = P.edges
        de = g.points_to_segments(x, a, b)[0]
        ie = int(np.argmin(de))
        if de[ie] > P.tol * 10:
            raise ChartMiss("chart origin must lie on the boundary")
        up = -np.asarray(P.facets[ie].normal)
        others = [j for j in range(len(P.facets)) if j != ie]
    if radius is None:
        a, b = P.edges
        radius = float(min(g.point_segment_distance(x, a[j], b[j]) for j in others))
    return ChartFrame(_readonly(x), _readonly(up), float(radius))


def vertical_projection(P, x, frame):
    """Boundary point hit when moving from ``x`` straight down the chart axis."""
    x = np.asarray(x, dtype=float)
    up = np.asarray(frame.up, dtype=float)
    if np.linalg.norm(x - frame.origin) > frame.radius + P.tol:
        raise ChartMiss("point lies outside the chart ball")
    if not P.contains(x)[0]:
        raise ChartMiss("point lies outside the polytope")
    if P.dimension == 2:
        a, b = P.edges
        best = math.inf
        for ai, bi in zip(a, b):
            if g.point_segment_distance(x, ai, bi) <= P.tol:
                best = 0.0
                break
            d = bi - ai
            den = g.cross2(-up, d)
            if abs(den) < 1e-300:
                continue
            w = ai - x
            s = g.cross2(w, d) / den
            t = g.cross2(w, -up) / den
            if s >= -P.tol and -1e-12 <= t <= 1 + 1e-12:
                best = min(best, max(s, 0.0))
    else:
        best = math.inf
        for f in P.facets:
            den = float(np.dot(-up, f.normal))
            if abs(den) < 1e-300:
                continue
            s = (f.offset - float(np.dot(x, f.normal))) / den
            if s < -P.tol:
                continue
            hit = x - max(s, 0.0) * up
            poly = P.vertices[list(f.vertices)]
            if g.point_polygon3_distance(hit, poly, f.normal) <= P.tol * 10:
                best = min(best, max(s, 0.0))
    if not math.isfinite(best):
        raise ChartMiss("no boundary point below x along the chart axis")
    hit = x - best * up
    if np.linalg.norm(hit - frame.origin) > frame.radius + P.tol:
        raise ChartMiss("projection leaves the chart patch")
    return hit


# --------------------------------------------------------- named examples


def unit_square():
    return build_polytope(vertices=[[0, 0], [1, 0], [1, 1], [0, 1]])


def rectangle(a, b):
    return build_polytope(vertices=[[0, 0], [a, 0], [a, b], [0, b]])


def l_shape():
    return build_polytope(vertices=[[-1, -1], [1, -1], [1, 0], [0, 0], [0, 1], [-1, 1]])


def t_shape():
    return build_polytope(
        vertices=[[-1.5, 0], [1.5, 0], [1.5, 1], [0.5, 1], [0.5, 2], [-0.5, 2], [-0.5, 1], [-1.5, 1]]
    )


def regular_polygon(m, radius=1.0):
    th = 2 * math.pi * np.arange(m) / m + math.pi / 2
    return build_polytope(vertices=np.stack([radius * np.cos(th), radius * np.sin(th)], axis=1))


def equilateral_triangle(side=1.0):
    return build_polytope(vertices=[[0, 0], [side, 0], [side / 2, side * math.sqrt(3) / 2]])


def unit_cube():
    v = [[x, y, z] for z in (0, 1) for y in (0, 1) for x in (0, 1)]
    f = [[0, 2, 3, 1], [4, 5, 7, 6], [0, 1, 5, 4], [2, 6, 7, 3], [0, 4, 6, 2], [1, 3, 7, 5]]
    return build_polytope(dimension=3, vertices=v, facets=f)


NAMED = {
    "square": unit_square,
    "rectangle": lambda: rectangle(2.0, 1.0),
    "lshape": l_shape,
    "tshape": t_shape,
    "pentagon": lambda: regular_polygon(5),
    "triangle": equilateral_triangle,
    "cube": unit_cube,
}
