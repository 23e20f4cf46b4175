"""Conforming Delaunay-refined triangulations of simple polygons and P1 fields.

The mesher works on top of ``scipy.spatial.Delaunay``.  Boundary segments
are kept Gabriel (no node inside their diametral circle), which makes each
one an edge of the Delaunay triangulation, so dropping triangles whose
centroid lies outside the polygon leaves a conforming mesh.  Quality is
then enforced Ruppert-style: circumcentres of bad triangles are inserted in
batches and encroached segments are split instead.
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from . import _geom as g
from .errors import MeshFailure, PointOutsideDomain

log = logging.getLogger(__name__)

MESH_VERSION = 1


@dataclass
class Mesh:
    nodes: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    h: float

    @cached_property
    def edges(self):
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    @cached_property
    def areas(self):
        p = self.nodes[self.triangles]
        return 0.5 * g.cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    @cached_property
    def incident(self):
        """CSR map node -> incident triangles as (indptr, indices)."""
        n = len(self.nodes)
        flat = self.triangles.ravel()
        order = np.argsort(flat, kind="stable")
        indptr = np.zeros(n + 1, dtype=int)
        np.add.at(indptr, flat + 1, 1)
        return np.cumsum(indptr), order // 3

    def triangles_at(self, node):
        indptr, idx = self.incident
        return idx[indptr[node]:indptr[node + 1]]

    @property
    def max_edge(self):
        e = self.edges
        return float(np.linalg.norm(self.nodes[e[:, 0]] - self.nodes[e[:, 1]], axis=1).max())

    @property
    def min_angle(self):
        return float(np.degrees(g.triangle_angles(self.nodes[self.triangles]).min()))

    @property
    def interior(self):
        return np.nonzero(~self.boundary)[0]

    @cached_property
    def boundary_edges(self):
        t = self.triangles
        e = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
        uniq, counts = np.unique(e, axis=0, return_counts=True)
        return uniq[counts == 1]

    def save(self, path):
        np.savez(path, version=MESH_VERSION, nodes=self.nodes, triangles=self.triangles,
                 boundary=self.boundary, h=self.h)

    @classmethod
    def load(cls, path):
        d = np.load(path)
        if int(d["version"]) != MESH_VERSION:
            raise MeshFailure(f"mesh cache version {int(d['version'])} is not supported")
        return cls(d["nodes"], d["triangles"], d["boundary"], float(d["h"]))


def _size_field(P, h, grade, grade_radius, levels):
    if not grade or not len(P.reflex_vertices):
        return lambda pts: np.full(len(np.atleast_2d(pts)), h)
    corners = P.vertices[P.reflex_vertices]
    R = grade_radius if grade_radius is not None else 0.25 * P.vertex_separation
    floor = 2.0 ** -levels

    def size(pts):
        pts = np.atleast_2d(pts)
        d = np.min(np.linalg.norm(pts[:, None, :] - corners[None], axis=2), axis=1)
        # mesh size halves each time the distance to the corner halves
        return h * np.clip(d / R, floor, 1.0)

    return size


def _boundary_nodes(P, size):
    """Points along each edge, spaced by the local size, with segment list."""
    pts, segs, parent = [], [], []
    a, b = P.edges
    for i in range(len(a)):
        L = float(np.linalg.norm(b[i] - a[i]))
        # march from a to b, step set by the size field at the current point
        ts = [0.0]
        while True:
            p = a[i] + ts[-1] * (b[i] - a[i])
            step = 0.9 * float(size(p)[0]) / L
            if ts[-1] + step >= 1.0 - 1e-9:
                break
            ts.append(ts[-1] + step)
        # spread the remainder evenly over the last pieces
        ts = np.array(ts + [1.0])
        if len(ts) > 2:
            last = ts[-1] - ts[-2]
            prev = ts[-2] - ts[-3]
            if last < 0.5 * prev:
                ts = np.delete(ts, -2)
        for t in ts[:-1]:
            pts.append(a[i] + t * (b[i] - a[i]))
        parent.extend([i] * (len(ts) - 1))
    n = len(pts)
    for k in range(n):
        segs.append((k, (k + 1) % n))
    return np.array(pts), segs, parent


def _hex_lattice(P, s):
    lo, hi = P.vertices.min(axis=0), P.vertices.max(axis=0)
    dy = s * math.sqrt(3) / 2
    ys = np.arange(lo[1] + dy / 2, hi[1], dy)
    rows = []
    for j, y in enumerate(ys):
        xs = np.arange(lo[0] + (0.5 * s if j % 2 else 0.0) + s / 4, hi[0], s)
        rows.append(np.stack([xs, np.full_like(xs, y)], axis=1))
    return np.concatenate(rows) if rows else np.zeros((0, 2))


class _Segments:
    """Boundary subsegments as node-index pairs with fast encroachment queries."""

    def __init__(self, nodes, segs):
        self.segs = list(segs)
        self.refresh(nodes)

    def refresh(self, nodes):
        s = np.array(self.segs)
        self.mid = 0.5 * (nodes[s[:, 0]] + nodes[s[:, 1]])
        self.rad = 0.5 * np.linalg.norm(nodes[s[:, 0]] - nodes[s[:, 1]], axis=1)
        self.tree = cKDTree(self.mid)
        self.rmax = float(self.rad.max())

    def encroached_by(self, pts):
        """For each point, index of a segment whose diametral circle holds it, else -1."""
        pts = np.atleast_2d(pts)
        out = np.full(len(pts), -1)
        cand = self.tree.query_ball_point(pts, self.rmax * (1 + 1e-12))
        for i, idx in enumerate(cand):
            if not idx:
                continue
            idx = np.asarray(idx)
            d = np.linalg.norm(self.mid[idx] - pts[i], axis=1)
            hit = idx[d < self.rad[idx] * (1 - 1e-9)]
            if len(hit):
                out[i] = hit[np.argmax(self.rad[hit])]
        return out


def generate_mesh(P, h, min_angle=20.0, grade_corners=False, grade_radius=None,
                  grade_levels=4, max_iter=60):
    """Quality triangulation of a polygon with max edge <= h (or the graded size)."""
    if P.dimension != 2:
        raise MeshFailure("meshing is planar only")
    if not h > 0:
        raise MeshFailure(f"mesh size must be positive, got {h}")
    size = _size_field(P, h, grade_corners, grade_radius, grade_levels)
    bnodes, segs, _ = _boundary_nodes(P, size)
    nb = len(bnodes)
    inner = _hex_lattice(P, 0.85 * h)
    if len(inner):
        inner = inner[P.contains(inner)]
        d = g.points_to_segments(inner, *P.edges).min(axis=1)
        # the graded zone is left to refinement, which follows the size field
        inner = inner[(d > 0.45 * h) & (size(inner) >= h)]
    nodes = np.concatenate([bnodes, inner])
    is_bnd = np.zeros(len(nodes), dtype=bool)
    is_bnd[:nb] = True
    S = _Segments(nodes, segs)
    tol = P.tol
    sin_min = math.sin(math.radians(min_angle))

    def drop_encroaching(nodes, is_bnd):
        enc = S.encroached_by(nodes)
        keep = (enc < 0) | is_bnd
        return nodes[keep], is_bnd[keep], keep

    for it in range(max_iter):
        nodes, is_bnd, keep = drop_encroaching(nodes, is_bnd)
        S = _remap(S, keep, nodes)
        tri = Delaunay(nodes)
        simp = tri.simplices
        cent = nodes[simp].mean(axis=1)
        simp = simp[P.contains(cent)]
        p = nodes[simp]
        ang = g.triangle_angles(p)
        elen = np.stack([np.linalg.norm(p[:, 1] - p[:, 2], axis=1),
                         np.linalg.norm(p[:, 2] - p[:, 0], axis=1),
                         np.linalg.norm(p[:, 0] - p[:, 1], axis=1)], axis=1)
        target = size(p.mean(axis=1))
        small = np.sin(ang.min(axis=1)) < sin_min
        big = elen.max(axis=1) > target * (1 + 1e-9)
        bad = np.nonzero(small | big)[0]
        log.debug("pass %d: %d nodes, %d small, %d big", it, len(nodes), small.sum(), big.sum())
        if not len(bad):
            break
        cc = g.circumcenters(p[bad])
        # worst first: large triangles then skinny ones
        prio = -elen[bad].max(axis=1) / target[bad]
        order = np.argsort(prio, kind="stable")
        bad, cc = bad[order], cc[order]
        enc = S.encroached_by(cc)
        outside = ~P.contains(cc)
        split = set(enc[enc >= 0].tolist())
        # circumcentres falling outside without encroaching: split the nearest segment
        for i in np.nonzero(outside & (enc < 0))[0]:
            split.add(int(S.tree.query(cc[i])[1]))
        new_pts = []
        ok = (enc < 0) & ~outside
        if ok.any():
            cand = cc[ok]
            loc = target[bad][ok]
            # greedy suppression so a batch never inserts near-duplicate points
            ctree = cKDTree(cand)
            blocked = np.zeros(len(cand), dtype=bool)
            for j in range(len(cand)):
                if blocked[j]:
                    continue
                new_pts.append(cand[j])
                blocked[ctree.query_ball_point(cand[j], 0.5 * loc[j])] = True
        # split encroached segments at their midpoints
        seg_new = []
        for si in sorted(split):
            i, j = S.segs[si]
            seg_new.append((si, 0.5 * (nodes[i] + nodes[j])))
        if not new_pts and not seg_new:
            raise MeshFailure("refinement stalled before reaching the quality target")
        base = len(nodes)
        add = [m for _, m in seg_new] + list(new_pts)
        nodes = np.concatenate([nodes, np.array(add)])
        is_bnd = np.concatenate([is_bnd, np.zeros(len(add), dtype=bool)])
        segs = list(S.segs)
        for k, (si, _) in enumerate(seg_new):
            i, j = segs[si]
            m = base + k
            is_bnd[m] = True
            segs[si] = (i, m)
            segs.append((m, j))
        S = _Segments(nodes, segs)
    else:
        raise MeshFailure(f"quality target not reached after {max_iter} refinement passes")

    mesh = _finalize(nodes, simp, is_bnd, P, tol)
    log.debug("mesh: %d nodes, %d triangles, min angle %.2f", len(mesh.nodes),
              len(mesh.triangles), mesh.min_angle)
    return mesh


def _remap(S, keep, nodes):
    new_index = np.cumsum(keep) - 1
    segs = [(int(new_index[i]), int(new_index[j])) for i, j in S.segs]
    return _Segments(nodes, segs)


def _finalize(nodes, simp, is_bnd, P, tol):
    used = np.unique(simp)
    remap = np.full(len(nodes), -1)
    remap[used] = np.arange(len(used))
    nodes = nodes[used]
    tris = remap[simp]
    is_bnd = is_bnd[used]
    # orient counter-clockwise
    p = nodes[tris]
    neg = g.cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]) < 0
    tris[neg] = tris[neg][:, [0, 2, 1]]
    # snap boundary nodes exactly onto their edge
    a, b = P.edges
    bi = np.nonzero(is_bnd)[0]
    d = g.points_to_segments(nodes[bi], a, b)
    k = np.argmin(d, axis=1)
    for n_, e in zip(bi, k):
        ab = b[e] - a[e]
        t = np.clip(np.dot(nodes[n_] - a[e], ab) / np.dot(ab, ab), 0, 1)
        nodes[n_] = a[e] + t * ab
    for v in P.vertices:
        j = int(np.argmin(np.linalg.norm(nodes - v, axis=1)))
        nodes[j] = v
    mesh = Mesh(nodes, tris.astype(np.int64), is_bnd, 0.0)
    mesh.h = mesh.max_edge
    if len(mesh.boundary_edges):
        be = mesh.boundary_edges
        if not np.all(is_bnd[be]):
            raise MeshFailure("boundary of the triangulation does not follow the polygon")
    return mesh


def mesh_cache_key(P, h, grade_corners=False, min_angle=20.0):
    text = f"{P.fingerprint}|{h!r}|{bool(grade_corners)}|{min_angle!r}|v{MESH_VERSION}"
    return hashlib.sha256(text.encode()).hexdigest()[:20]


def cache_dir():
    d = os.environ.get("NODAL_CACHE_DIR")
    return Path(d) if d else None


def cached_mesh(P, h, grade_corners=False, min_angle=20.0, directory=None):
    directory = Path(directory) if directory is not None else cache_dir()
    if directory is None:
        return generate_mesh(P, h, min_angle=min_angle, grade_corners=grade_corners)
    path = directory / f"mesh-{mesh_cache_key(P, h, grade_corners, min_angle)}.npz"
    if path.exists():
        return Mesh.load(path)
    mesh = generate_mesh(P, h, min_angle=min_angle, grade_corners=grade_corners)
    directory.mkdir(parents=True, exist_ok=True)
    mesh.save(path)
    return mesh


# ------------------------------------------------------------------ fields


class DiscreteField:
    """Piecewise-linear field given by node values on a mesh."""

    def __init__(self, mesh, values):
        self.mesh = mesh
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != (len(mesh.nodes),):
            raise ValueError("one value per mesh node is required")

    @cached_property
    def _locator(self):
        p = self.mesh.nodes[self.mesh.triangles]
        return cKDTree(p.mean(axis=1)), p

    def locate(self, points, tol=1e-10):
        """Triangle index and barycentric weights for each point."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        tree, p = self._locator
        k = min(12, len(p))
        _, cand = tree.query(pts, k=k)
        cand = np.atleast_2d(cand).reshape(len(pts), k)
        tri = np.full(len(pts), -1)
        lam = np.zeros((len(pts), 3))
        scale = self.mesh.h
        for c in range(k):
            todo = np.nonzero(tri < 0)[0]
            if not len(todo):
                break
            t = cand[todo, c]
            w = _barycentric(p[t], pts[todo])
            hit = w.min(axis=1) >= -tol * max(scale, 1.0)
            tri[todo[hit]] = t[hit]
            lam[todo[hit]] = w[hit]
        for i in np.nonzero(tri < 0)[0]:
            w = _barycentric(p, np.repeat(pts[i][None], len(p), axis=0))
            j = int(np.argmax(w.min(axis=1)))
            if w[j].min() < -1e-9:
                raise PointOutsideDomain(f"{pts[i].tolist()} lies outside the mesh")
            tri[i] = j
            lam[i] = w[j]
        # rounding leaves ~1e-16 weights on the opposite node of points on an edge;
        # snapping them keeps boundary values exactly zero for Dirichlet fields
        lam[np.abs(lam) < 1e-12] = 0.0
        lam /= lam.sum(axis=1, keepdims=True)
        return tri, lam

    def evaluate(self, points):
        pts = np.asarray(points, dtype=float)
        tri, lam = self.locate(pts)
        v = np.einsum("ij,ij->i", lam, self.values[self.mesh.triangles[tri]])
        return v if pts.ndim > 1 else float(v[0])

    __call__ = evaluate

    @cached_property
    def gradients(self):
        """Constant gradient on each triangle, shape (m, 2)."""
        return p1_gradients(self.mesh, self.values)


def _barycentric(tris, pts):
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    det = g.cross2(b - a, c - a)
    l1 = g.cross2(pts - a, c - a) / det
    l2 = g.cross2(b - a, pts - a) / det
    return np.stack([1 - l1 - l2, l1, l2], axis=1)


def shape_gradients(mesh):
    """Gradients of the three hat functions on each triangle, shape (m, 3, 2)."""
    p = mesh.nodes[mesh.triangles]
    det = g.cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    grads = np.empty((len(p), 3, 2))
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        e = p[:, j] - p[:, i]
        grads[:, k, 0] = -e[:, 1] / det
        grads[:, k, 1] = e[:, 0] / det
    return grads


def p1_gradients(mesh, values):
    return np.einsum("mk,mkd->md", np.asarray(values)[mesh.triangles], shape_gradients(mesh))


def interpolate(mesh, fn):
    """Nodal interpolant of a callable f(points) -> values."""
    return DiscreteField(mesh, fn(mesh.nodes))
