"""Low-level planar and spatial primitives (vectorised where it pays)."""

import numpy as np


def cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def signed_area(poly):
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def point_segment_distance(p, a, b):
    """Distance from point(s) ``p`` (..., d) to the segment [a, b]."""
    p = np.asarray(p, dtype=float)
    ab = b - a
    denom = float(np.dot(ab, ab))
    t = np.clip(((p - a) @ ab) / denom, 0.0, 1.0)
    foot = a + t[..., None] * ab
    return np.linalg.norm(p - foot, axis=-1)


def points_to_segments(p, a, b):
    """Distances from points p (m, d) to segments a, b (k, d); returns (m, k)."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    ap = p[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("mkd,kd->mk", ap, ab) / denom, 0.0, 1.0)
    foot = a[None] + t[..., None] * ab[None]
    return np.linalg.norm(p[:, None, :] - foot, axis=-1)


def segment_segment_distance(p0, p1, q0, q1):
    """Minimum distance between two closed segments in R^d."""
    u = p1 - p0
    v = q1 - q0
    w = p0 - q0
    a, b, c = float(np.dot(u, u)), float(np.dot(u, v)), float(np.dot(v, v))
    d, e = float(np.dot(u, w)), float(np.dot(v, w))
    if a <= 0.0 and c <= 0.0:
        return float(np.linalg.norm(w))
    if a <= 0.0:
        s, t = 0.0, min(max(e / c, 0.0), 1.0)
    elif c <= 0.0:
        s, t = min(max(-d / a, 0.0), 1.0), 0.0
    else:
        den = a * c - b * b
        s = min(max((b * e - c * d) / den, 0.0), 1.0) if den > 0.0 else 0.0
        t = (b * s + e) / c
        if t < 0.0:
            t, s = 0.0, min(max(-d / a, 0.0), 1.0)
        elif t > 1.0:
            t, s = 1.0, min(max((b - d) / a, 0.0), 1.0)
    return float(np.linalg.norm(w + s * u - t * v))


def segments_intersect(p0, p1, q0, q1, tol=0.0):
    """Closed-segment contact test: distance between them at most ``tol``."""
    return segment_segment_distance(p0, p1, q0, q1) <= tol


def points_in_polygon(points, poly):
    """Even-odd crossing test for an array of points (m, 2)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    px, py = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i - 1]
        x1, y1 = poly[i]
        straddle = (y0 > py) != (y1 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
        inside ^= straddle & (px < xint)
    return inside


def segment_circle_params(a, b, c, r):
    """Parameters t in [0, 1] of a + t(b-a) lying strictly inside the circle.

    Returns (t0, t1) or None when the open disk misses the segment.
    """
    d = b - a
    f = a - c
    A = float(np.dot(d, d))
    B = 2.0 * float(np.dot(f, d))
    C = float(np.dot(f, f)) - r * r
    disc = B * B - 4.0 * A * C
    if disc <= 0.0:
        return None
    sq = np.sqrt(disc)
    t0 = (-B - sq) / (2.0 * A)
    t1 = (-B + sq) / (2.0 * A)
    t0, t1 = max(t0, 0.0), min(t1, 1.0)
    if t1 <= t0:
        return None
    return t0, t1


def circumcenters(p):
    """Circumcentres of triangles given as (m, 3, 2)."""
    a, b, c = p[:, 0], p[:, 1], p[:, 2]
    d = 2.0 * cross2(b - a, c - a)
    ba, ca = b - a, c - a
    nb = np.einsum("ij,ij->i", ba, ba)
    nc = np.einsum("ij,ij->i", ca, ca)
    ux = (ca[:, 1] * nb - ba[:, 1] * nc) / d
    uy = (ba[:, 0] * nc - ca[:, 0] * nb) / d
    return a + np.stack([ux, uy], axis=1)


def triangle_angles(p):
    """Interior angles (radians) of triangles (m, 3, 2); returns (m, 3)."""
    e0 = p[:, 1] - p[:, 0]
    e1 = p[:, 2] - p[:, 1]
    e2 = p[:, 0] - p[:, 2]

    def ang(u, v):
        cosv = -np.einsum("ij,ij->i", u, v) / (
            np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1)
        )
        return np.arccos(np.clip(cosv, -1.0, 1.0))

    return np.stack([ang(e2, e0), ang(e0, e1), ang(e1, e2)], axis=1)


# ---------------------------------------------------------------- 3-D helpers


def plane_basis(normal):
    n = normal / np.linalg.norm(normal)
    helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(n, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return e1, e2


def point_polygon3_distance(p, poly, normal):
    """Distance from a point to a planar polygon embedded in R^3."""
    e1, e2 = plane_basis(normal)
    origin = poly[0]
    q = p - origin
    h = float(np.dot(q, normal))
    uv = np.array([[np.dot(q, e1), np.dot(q, e2)]])
    poly2 = np.stack([(poly - origin) @ e1, (poly - origin) @ e2], axis=1)
    if points_in_polygon(uv, poly2)[0]:
        return abs(h)
    k = len(poly)
    return float(
        min(point_segment_distance(p, poly[i], poly[(i + 1) % k]) for i in range(k))
    )


def segment_polygon3_distance(a, b, poly, normal):
    k = len(poly)
    ha = float(np.dot(a - poly[0], normal))
    hb = float(np.dot(b - poly[0], normal))
    if ha * hb < 0.0:
        t = ha / (ha - hb)
        hit = a + t * (b - a)
        if point_polygon3_distance(hit, poly, normal) == 0.0:
            return 0.0
    cands = [point_polygon3_distance(a, poly, normal), point_polygon3_distance(b, poly, normal)]
    for i in range(k):
        cands.append(segment_segment_distance(a, b, poly[i], poly[(i + 1) % k]))
    return float(min(cands))


def solid_angle(p, a, b, c):
    """Signed solid angle of triangle abc seen from p (van Oosterom-Strackee)."""
    ra, rb, rc = a - p, b - p, c - p
    la, lb, lc = np.linalg.norm(ra), np.linalg.norm(rb), np.linalg.norm(rc)
    num = np.dot(ra, np.cross(rb, rc))
    den = la * lb * lc + np.dot(ra, rb) * lc + np.dot(ra, rc) * lb + np.dot(rb, rc) * la
    return 2.0 * np.arctan2(num, den)
