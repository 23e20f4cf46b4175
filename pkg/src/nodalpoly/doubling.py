"""Ball masses, doubling indices, frequency profiles and the checks built on them.

Planar integrals over B_r(c) ∩ P use a fan decomposition from the ball centre:
every boundary edge (of a mesh triangle or of the polygon) contributes the
signed region {c + ρ e_θ : θ between its endpoints, ρ < min(r, edge)}, which
splits into a triangle with apex c and at most two circular sectors.  For P1
fields the integrands are quadratic in local coordinates, so triangles and
sectors are integrated in closed form and the result is exact up to
rounding.  Smooth analytic fields use tensor Gauss rules on the same pieces.

Fields lifted to P x R are handled by writing the 3-D ball in latitude
slices: t = t0 + r sin θ, ρ = r cos θ, so every 3-D integral becomes a 1-D
nested Clenshaw-Curtis integral over planar disk integrals of radius ρ.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import _geom as g
from .errors import CertificateFailure, HypothesisFailure, NoiseFloor
from .mesh import DiscreteField, p1_gradients
from .star import star_certificate

EPS = np.finfo(float).eps
NOISE_FACTOR = 1e3
GRID_RATIO = 2.0 ** 0.125


# ------------------------------------------------------------ fan geometry


def _sector_terms(alpha, delta, r):
    """Moments (m00, m10, m01, m20, m11, m02) of the sector α..α+δ of radius r."""
    beta = alpha + delta
    sa, sb = np.sin(alpha), np.sin(beta)
    ca, cb = np.cos(alpha), np.cos(beta)
    s2 = (np.sin(2 * beta) - np.sin(2 * alpha)) / 4.0
    icc = delta / 2 + s2
    iss = delta / 2 - s2
    ics = (sb * sb - sa * sa) / 2.0
    r2, r3, r4 = r * r, r ** 3, r ** 4
    mom = np.stack([r2 / 2 * delta, r3 / 3 * (sb - sa), r3 / 3 * (ca - cb),
                    r4 / 4 * icc, r4 / 4 * ics, r4 / 4 * iss], axis=-1)
    # arc integrals of 1, cos, sin, cos², cos sin, sin² (in dθ)
    arc = np.stack([delta, sb - sa, ca - cb, icc, ics, iss], axis=-1)
    return mom, arc


def _triangle_terms(p, q):
    """Moments of the triangle (0, p, q) in local coordinates (signed)."""
    A = 0.5 * g.cross2(p, q)
    px, py, qx, qy = p[:, 0], p[:, 1], q[:, 0], q[:, 1]
    return np.stack([
        A,
        A * (px + qx) / 3,
        A * (py + qy) / 3,
        A / 6 * (px * px + qx * qx + px * qx),
        A / 12 * (2 * px * py + 2 * qx * qy + px * qy + qx * py),
        A / 6 * (py * py + qy * qy + py * qy),
    ], axis=-1)


def _signed_angle(u, v):
    return np.arctan2(g.cross2(u, v), np.einsum("ij,ij->i", u, v))


def _fan_pieces(P0, P1, r):
    """Split each fan region (0, P0, P1) ∩ disk(r) into triangle + sectors.

    Returns (tri_p, tri_q, hit) and sector (alpha, delta) lists as arrays,
    with ``owner`` indices into the input edges for the sectors.
    """
    d = P1 - P0
    A2 = np.einsum("ij,ij->i", d, d)
    B2 = 2 * np.einsum("ij,ij->i", P0, d)
    C2 = np.einsum("ij,ij->i", P0, P0) - r * r
    disc = B2 * B2 - 4 * A2 * C2
    sq = np.sqrt(np.maximum(disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t0 = np.maximum((-B2 - sq) / (2 * A2), 0.0)
        t1 = np.minimum((-B2 + sq) / (2 * A2), 1.0)
    hit = (disc > 0) & (t1 > t0)
    t0 = np.where(hit, t0, 0.0)
    t1 = np.where(hit, t1, 0.0)
    Q0 = P0 + t0[:, None] * d
    Q1 = P0 + t1[:, None] * d
    # sectors: P0 -> Q0 and Q1 -> P1 when hit, P0 -> P1 otherwise
    s1_from, s1_to = P0, np.where(hit[:, None], Q0, P1)
    s2_from, s2_to = Q1, P1
    a1 = np.arctan2(s1_from[:, 1], s1_from[:, 0])
    d1 = _signed_angle(s1_from, s1_to)
    a2 = np.arctan2(s2_from[:, 1], s2_from[:, 0])
    d2 = np.where(hit, _signed_angle(s2_from, s2_to), 0.0)
    return Q0, Q1, hit, (a1, d1), (a2, d2)


# ------------------------------------------------------------ integrators


class MeshIntegrator:
    """Exact ball integrals of one or more P1 fields on a mesh.

    ``values`` has shape (nodes,) or (nodes, q); results carry a trailing q
    axis in the second case.
    """

    dimension = 2

    def __init__(self, mesh, values, polytope=None):
        self.mesh = mesh
        self.polytope = polytope
        v = np.asarray(values, dtype=float)
        self.single = v.ndim == 1
        self.values = v[:, None] if self.single else v
        p = mesh.nodes[mesh.triangles]
        self._p = p
        self._grad = np.stack(
            [p1_gradients(mesh, self.values[:, j]) for j in range(self.values.shape[1])], axis=1
        )  # (m, q, 2)
        uT = self.values[mesh.triangles]  # (m, 3, q)
        area = mesh.areas
        Me = (np.ones((3, 3)) + np.eye(3)) / 12.0
        self._mass_full = np.einsum("mkq,kl,mlq->mq", uT, Me, uT) * area[:, None]
        self._energy_full = np.einsum("mqd,mqd->mq", self._grad, self._grad) * area[:, None]
        self._cache = {}

    def _center_data(self, c):
        key = tuple(np.round(c, 15))
        if key in self._cache:
            return self._cache[key]
        p = self._p - c
        dist = np.linalg.norm(p, axis=2)
        dmax = dist.max(axis=1)
        # point-triangle distance: zero inside, else nearest edge
        dmin = np.full(len(p), np.inf)
        for k in range(3):
            a, b = p[:, k], p[:, (k + 1) % 3]
            ab = b - a
            t = np.clip(-np.einsum("ij,ij->i", a, ab) / np.einsum("ij,ij->i", ab, ab), 0, 1)
            dmin = np.minimum(dmin, np.linalg.norm(a + t[:, None] * ab, axis=1))
        s0 = g.cross2(p[:, 1] - p[:, 0], -p[:, 0])
        s1 = g.cross2(p[:, 2] - p[:, 1], -p[:, 1])
        s2 = g.cross2(p[:, 0] - p[:, 2], -p[:, 2])
        inside = (s0 >= 0) & (s1 >= 0) & (s2 >= 0)
        dmin[inside] = 0.0
        order = np.argsort(dmax, kind="stable")
        pref_m = np.vstack([np.zeros((1, self.values.shape[1])), np.cumsum(self._mass_full[order], axis=0)])
        pref_d = np.vstack([np.zeros((1, self.values.shape[1])), np.cumsum(self._energy_full[order], axis=0)])
        # A = value of the triangle's linear extension at the centre
        u0 = self.values[self.mesh.triangles[:, 0]]
        A = u0 - np.einsum("mqd,md->mq", self._grad, p[:, 0])
        data = (p, dmin, dmax, dmax[order], pref_m, pref_d, A)
        if len(self._cache) > 64:
            self._cache.clear()
        self._cache[key] = data
        return data

    def reference_mass(self, c, radius=None):
        return self._mass_full.sum(axis=0)

    def moments(self, c, radii):
        """(mass, H, D) at every radius; arrays of shape (len(radii), q)."""
        c = np.asarray(c, dtype=float)[:2]
        radii = np.atleast_1d(np.asarray(radii, dtype=float))
        p, dmin, dmax, dmax_sorted, pref_m, pref_d, A = self._center_data(c)
        q = self.values.shape[1]
        order = np.argsort(radii, kind="stable")
        rs = radii[order]
        n_in = np.searchsorted(dmax_sorted, rs, side="right")
        mass = pref_m[n_in].copy()
        energy = pref_d[n_in].copy()
        H = np.zeros((len(rs), q))
        # cut pairs (triangle, radius) with dmin < r < dmax
        cand = np.nonzero(dmin < rs[-1])[0]
        lo = np.searchsorted(rs, dmin[cand], side="right")
        hi = np.searchsorted(rs, dmax[cand], side="left")
        cnt = np.maximum(hi - lo, 0)
        if cnt.sum():
            tri = np.repeat(cand, cnt)
            start = np.repeat(lo - np.cumsum(cnt) + cnt, cnt)
            rad_idx = np.arange(cnt.sum()) + start
            r = rs[rad_idx]
            mom = np.zeros((len(tri), 6))
            arc = np.zeros((len(tri), 6))
            for k in range(3):
                P0 = p[tri, k]
                P1 = p[tri, (k + 1) % 3]
                Q0, Q1, hit, (a1, d1), (a2, d2) = _fan_pieces(P0, P1, r)
                mt = _triangle_terms(Q0, Q1)
                mt[~hit] = 0.0
                m1, c1 = _sector_terms(a1, d1, r)
                m2, c2 = _sector_terms(a2, d2, r)
                mom += mt + m1 + m2
                arc += c1 + c2
            Aq = A[tri]  # (n, q)
            B = self._grad[tri]  # (n, q, 2)
            Bx, By = B[..., 0], B[..., 1]
            mc = (Aq * Aq * mom[:, [0]] + 2 * Aq * (Bx * mom[:, [1]] + By * mom[:, [2]])
                  + Bx * Bx * mom[:, [3]] + 2 * Bx * By * mom[:, [4]] + By * By * mom[:, [5]])
            rr = r[:, None]
            hc = rr * (Aq * Aq * arc[:, [0]] + 2 * Aq * rr * (Bx * arc[:, [1]] + By * arc[:, [2]])
                       + rr * rr * (Bx * Bx * arc[:, [3]] + 2 * Bx * By * arc[:, [4]] + By * By * arc[:, [5]]))
            dc = (Bx * Bx + By * By) * mom[:, [0]]
            np.add.at(mass, rad_idx, mc)
            np.add.at(H, rad_idx, hc)
            np.add.at(energy, rad_idx, dc)
        inv = np.empty_like(order)
        inv[order] = np.arange(len(order))
        return mass[inv], H[inv], energy[inv]


def _gauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


class AnalyticIntegrator:
    """Ball integrals of a smooth field on a polygon by fan decomposition.

    ``f`` maps (m, 2) points to values (m,) or (m, q); ``grad`` maps them to
    (m, 2) or (m, q, 2).  Each fan triangle is integrated with a collapsed
    tensor Gauss rule and each sector with a polar tensor Gauss rule, which is
    exact for polynomial fields of moderate degree.
    """

    dimension = 2

    def __init__(self, polytope, f, grad, order=24):
        self.polytope = polytope
        self.f = f
        self.grad = grad
        self.n = order
        self._x, self._w = _gauss(order)

    def _eval(self, pts):
        v = np.asarray(self.f(pts), dtype=float)
        gr = np.asarray(self.grad(pts), dtype=float)
        if v.ndim == 1:
            v, gr = v[:, None], gr[:, None, :]
        return v, np.einsum("mqd,mqd->mq", gr, gr)

    def reference_mass(self, c, radius=None):
        return self.moments(c, [self.polytope.diam * 1.0001])[0][0]

    def _one(self, c, r):
        a, b = self.polytope.edges
        P0, P1 = a - c, b - c
        rr = np.full(len(P0), r)
        Q0, Q1, hit, s1, s2 = _fan_pieces(P0, P1, rr)
        x01 = 0.5 * (self._x + 1)
        w01 = 0.5 * self._w
        pts, wts, arc_pts, arc_wts = [], [], [], []
        # fan triangles (0, Q0, Q1): p = u (Q0 + v (Q1 - Q0)), jac = u cross(Q0, Q1)
        for i in np.nonzero(hit)[0]:
            cr = g.cross2(Q0[i], Q1[i])
            if cr == 0.0:
                continue
            U, V = np.meshgrid(x01, x01, indexing="ij")
            W = np.outer(w01, w01) * U * cr
            pp = U[..., None] * (Q0[i] + V[..., None] * (Q1[i] - Q0[i]))
            pts.append(pp.reshape(-1, 2))
            wts.append(W.ravel())
        # sectors: polar tensor rule; arcs for the sphere integral
        for alpha, delta in (s1, s2):
            for i in np.nonzero(delta != 0.0)[0]:
                th = alpha[i] + delta[i] * x01
                wt = delta[i] * w01
                rho = r * x01
                wr = r * w01 * rho
                TH, RH = np.meshgrid(th, rho, indexing="ij")
                pp = np.stack([RH * np.cos(TH), RH * np.sin(TH)], axis=-1)
                pts.append(pp.reshape(-1, 2))
                wts.append(np.outer(wt, wr).ravel())
                arc_pts.append(np.stack([r * np.cos(th), r * np.sin(th)], axis=1))
                arc_wts.append(wt * r)
        q = None
        if pts:
            X = np.concatenate(pts) + c
            Wt = np.concatenate(wts)
            v, e = self._eval(X)
            q = v.shape[1]
            mass = Wt @ (v * v)
            energy = Wt @ e
        if arc_pts:
            X = np.concatenate(arc_pts) + c
            Wt = np.concatenate(arc_wts)
            v, _ = self._eval(X)
            q = v.shape[1]
            H = Wt @ (v * v)
        if q is None:
            q = self._eval(c[None])[0].shape[1]
        z = np.zeros(q)
        return (mass if pts else z), (H if arc_pts else z), (energy if pts else z)

    def moments(self, c, radii):
        c = np.asarray(c, dtype=float)[:2]
        out = [self._one(c, float(r)) for r in np.atleast_1d(radii)]
        return tuple(np.array([o[k] for o in out]) for k in range(3))


def clenshaw_curtis(n):
    """Nodes cos(jπ/n), j = 0..n, and weights on [-1, 1] (n even)."""
    th = np.pi * np.arange(n + 1) / n
    x = np.cos(th)
    w = np.zeros(n + 1)
    v = np.ones(n - 1)
    ti = th[1:-1]
    for k in range(1, n // 2):
        v -= 2 * np.cos(2 * k * ti) / (4 * k * k - 1)
    v -= np.cos(n * ti) / (n * n - 1)
    w[0] = w[n] = 1.0 / (n * n - 1)
    w[1:-1] = 2 * v / n
    return x, w


class LiftedIntegrator:
    """Integrals of u(x, t) = exp(t k) φ(x), k = sqrt(λ), over 3-D balls in P x R.

    ``base`` integrates φ (possibly several columns, one per λ) over planar
    disks.  Latitude substitution t = t0 + r sin θ turns each 3-D integral
    into a 1-D sum over θ.  The rule is nested Clenshaw-Curtis, doubled
    until the mass changes by less than ``rtol`` and H, D by less than
    ``10 rtol`` (the planar sphere and energy integrals are only piecewise
    smooth in the slice radius, so they converge more slowly).
    """

    dimension = 3

    def __init__(self, base, values, rtol=1e-6, n0=64, nmax=2048):
        self.base = base
        self.polytope = base.polytope
        self.lam = np.atleast_1d(np.asarray(values, dtype=float))
        self.k = np.sqrt(self.lam)
        self.rtol, self.n0, self.nmax = rtol, n0, nmax
        self.last_error = None

    def _integrand(self, c, radii, x):
        """Unweighted latitude integrands at nodes x, each of shape (radii, nodes, q)."""
        th = 0.5 * np.pi * x
        R = radii[:, None]
        rho = (R * np.cos(th)[None]).ravel()
        t = (c[2] + R * np.sin(th)[None]).ravel()
        m2, h2, d2 = self.base.moments(c[:2], rho)
        ex = np.exp(2 * t[:, None] * self.k[None])
        cos = np.tile(np.cos(th), len(radii))[:, None]
        rr = np.repeat(radii, len(x))[:, None]
        shape = (len(radii), len(x), -1)
        return (
            (ex * m2 * rr * cos).reshape(shape),
            (ex * h2 * rr).reshape(shape),
            (ex * (d2 + self.lam[None] * m2) * rr * cos).reshape(shape),
        )

    def moments(self, c, radii):
        c = np.asarray(c, dtype=float)
        if len(c) == 2:
            c = np.append(c, 0.0)
        radii = np.atleast_1d(np.asarray(radii, dtype=float))
        n = self.n0
        x, w = clenshaw_curtis(n)
        F = self._integrand(c, radii, x)
        prev = [0.5 * np.pi * np.einsum("j,rjq->rq", w, f) for f in F]
        while True:
            n *= 2
            x2, w2 = clenshaw_curtis(n)
            Fnew = self._integrand(c, radii, x2[1::2])
            merged = []
            for f_old, f_new in zip(F, Fnew):
                f = np.empty((f_old.shape[0], n + 1, f_old.shape[2]))
                f[:, 0::2], f[:, 1::2] = f_old, f_new
                merged.append(f)
            F = merged
            cur = [0.5 * np.pi * np.einsum("j,rjq->rq", w2, f) for f in F]
            rel = [float(np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300)))
                   for a, b in zip(cur, prev)]
            if (rel[0] < self.rtol and max(rel[1:]) < 10 * self.rtol) or n >= self.nmax:
                self.last_error = max(rel)
                return tuple(cur)
            prev = cur

    def reference_mass(self, c, radius=None):
        """Mass of the slab P x (t0 - R, t0 + R), in closed form from the planar mass."""
        c = np.asarray(c, dtype=float)
        t0 = c[2] if len(c) > 2 else 0.0
        R = self.polytope.diam if radius is None else radius
        return self.base.reference_mass(c) * np.exp(2 * self.k * t0) * np.sinh(2 * self.k * R) / self.k


# ------------------------------------------------------------ field types


class HomogeneousHarmonic:
    """Re(e^{-i phase} (z - c)^k), harmonic and homogeneous of degree k about c."""

    def __init__(self, k, center=(0.0, 0.0), phase=0.0):
        self.k = int(k)
        self.center = np.asarray(center, dtype=float)
        self.phase = float(phase)

    def _z(self, pts):
        p = np.asarray(pts, dtype=float) - self.center
        return (p[..., 0] + 1j * p[..., 1]) * np.exp(-1j * self.phase / max(self.k, 1))

    def __call__(self, pts):
        return np.real(self._z(pts) ** self.k)

    def gradient(self, pts):
        if self.k == 0:
            return np.zeros(np.shape(pts))
        z = self._z(pts)
        rot = np.exp(-1j * self.phase / self.k)
        d = self.k * z ** (self.k - 1) * rot  # f'(z); grad Re f = (Re f', -Im f')
        return np.stack([np.real(d), -np.imag(d)], axis=-1)


class SumField:
    def __init__(self, *terms):
        self.terms = terms  # (coefficient, field)

    def __call__(self, pts):
        return sum(a * f(pts) for a, f in self.terms)

    def gradient(self, pts):
        return sum(a * f.gradient(pts) for a, f in self.terms)


def integrator(u, P=None, **kw):
    """Pick the integrator for a field: P1 field, lifted field or analytic field."""
    from .spectral import LiftedField

    if isinstance(u, (MeshIntegrator, AnalyticIntegrator, LiftedIntegrator)):
        return u
    if isinstance(u, LiftedField):
        base = integrator(u.phi, P)
        return LiftedIntegrator(base, u.value, **kw)
    if isinstance(u, DiscreteField):
        return MeshIntegrator(u.mesh, u.values, P)
    if P is None:
        raise ValueError("analytic fields need the domain polytope")
    return AnalyticIntegrator(P, u, u.gradient)


# ------------------------------------------------------------ doubling


def _noise_check(I, c, masses, radius=None):
    ref = I.reference_mass(c, radius)
    floor = NOISE_FACTOR * EPS * np.abs(ref)
    return np.asarray(masses) <= floor


def ball_mass(u, P, x, r):
    """∫_{B_r(x) ∩ Ω} u² (zero if the ball misses Ω)."""
    if not r > 0:
        raise ValueError("radius must be positive")
    I = integrator(u, P)
    m = I.moments(np.asarray(x, dtype=float), [r])[0][0]
    return float(m[0]) if m.shape == (1,) else m


def doubling(u, P, x, r):
    """N_u(x, r) = log2(mass(2r) / mass(r)); raises NoiseFloor on vanishing masses."""
    I = integrator(u, P)
    x = np.asarray(x, dtype=float)
    m = I.moments(x, [r, 2 * r])[0]
    if np.any(_noise_check(I, x, m, 2 * r)):
        raise NoiseFloor(f"ball mass at r={r} is below the noise floor")
    N = np.log2(m[1] / m[0])
    return float(N[0]) if N.shape == (1,) else N


def radius_grid(r_min, r_max, ratio=GRID_RATIO):
    """Geometric grid; when ratio**j == 2 the value 2r is itself a grid point."""
    j = round(math.log(2) / math.log(ratio))
    n = int(math.floor(math.log(r_max / r_min) / math.log(ratio) + 1e-9)) + 1
    if j >= 1 and abs(ratio ** j - 2) < 1e-12:
        base = r_min * 2.0 ** (np.arange(j) / j)
        i = np.arange(n)
        return base[i % j] * 2.0 ** (i // j)
    return r_min * ratio ** np.arange(n)


RESOLUTION_FACTOR = 8.0


def local_mesh_size(mesh, center, r):
    """Longest edge among triangles meeting B(center, r) (planar part of the centre)."""
    c = np.asarray(center, dtype=float)[:2]
    cen = mesh.nodes[mesh.triangles].mean(axis=1)
    sel = np.linalg.norm(cen - c, axis=1) <= r + mesh.max_edge
    p = mesh.nodes[mesh.triangles[sel]]
    return float(np.linalg.norm(p - np.roll(p, 1, axis=1), axis=2).max())


def resolved_r_min(mesh, center, r_min, factor=RESOLUTION_FACTOR):
    """Smallest r >= r_min with r >= factor * (local mesh size near the centre)."""
    r = float(r_min)
    for _ in range(50):
        need = factor * local_mesh_size(mesh, center, r)
        if r >= need:
            return r
        r = need
    return r


@dataclass
class DoublingProfile:
    center: np.ndarray
    radii: np.ndarray
    mass: np.ndarray
    mass2: np.ndarray  # mass at 2r
    H: np.ndarray
    D: np.ndarray
    dimension: int
    certified: bool
    certificate: object = None
    quad_error: float = 0.0
    noise: np.ndarray = None
    column: int = 0

    @property
    def beta(self):
        return self.radii * self.D / self.H

    @property
    def N(self):
        return np.log2(self.mass2 / self.mass)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "mass", "H", "D", "beta", "N"])
        for row in zip(self.radii, self.mass, self.H, self.D, self.beta, self.N):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def as_dict(self):
        return {
            "center": np.asarray(self.center).tolist(),
            "certified": self.certified,
            "quad_error": self.quad_error,
            "r": self.radii.tolist(),
            "N": self.N.tolist(),
            "beta": self.beta.tolist(),
        }


def _certify(P, center, radius):
    cert = star_certificate(P, np.asarray(center)[:2], radius)
    # the integrals cover all of B ∩ Ω, so the whole intersection must be star-shaped
    return cert, bool(cert.star_shaped and cert.n_components == 1)


def frequency_profiles(u, P, center, radii, strict=False):
    """Profiles for every column of a (multi-column) field at one centre."""
    I = integrator(u, P)
    center = np.asarray(center, dtype=float)
    radii = np.asarray(radii, dtype=float)
    cert, ok = _certify(P, center, 2 * radii.max())
    if strict and not ok:
        raise CertificateFailure("ball at twice the largest radius is not star-shaped", cert)
    # 2r usually lies on the grid already; integrate each distinct radius once
    allr, inv = np.unique(np.concatenate([radii, 2 * radii]), return_inverse=True)
    m, H, D = (a[inv] for a in I.moments(center, allr))
    n = len(radii)
    noise = _noise_check(I, center, m, allr.max())
    err = getattr(I, "last_error", None) or 0.0
    dim = 3 if isinstance(I, LiftedIntegrator) else 2
    out = []
    for j in range(m.shape[1]):
        out.append(DoublingProfile(center, radii, m[:n, j], m[n:, j], H[:n, j], D[:n, j], dim,
                                   ok, cert, err, noise[:n, j] | noise[n:, j], j))
    return out


def frequency_profile(u, P, center, radii, strict=False):
    return frequency_profiles(u, P, center, radii, strict)[0]


@dataclass
class MonotonicityReport:
    certified: bool
    violations_N: int
    violations_beta: int
    worst_N: float
    worst_beta: float
    tol: float
    excluded: int = 0

    @property
    def passed(self):
        return (not self.certified) or (self.violations_N == 0 and self.violations_beta == 0)

    def as_dict(self):
        return dict(self.__dict__, passed=self.passed)


def monotonicity_check(profile, tol=1e-3):
    """Nondecreasing N and β on the grid up to ``tol`` (noise-floor radii excluded)."""
    keep = ~profile.noise if profile.noise is not None else np.ones(len(profile.radii), bool)
    N, b = profile.N[keep], profile.beta[keep]
    dN = N[:-1] - N[1:]
    db = b[:-1] - b[1:]
    worst_N = float(max(dN.max(initial=0.0), 0.0))
    worst_b = float(max(db.max(initial=0.0), 0.0))
    return MonotonicityReport(profile.certified, int(np.sum(dN > tol)), int(np.sum(db > tol)),
                              worst_N, worst_b, tol, int(np.sum(~keep)))


@dataclass
class FourSphereReport:
    tau: float
    t: float
    lhs: float
    rhs: float
    certified: bool
    tol: float

    @property
    def holds(self):
        return self.lhs <= self.rhs * (1 + self.tol)

    def as_dict(self):
        return dict(self.__dict__, holds=self.holds)


def four_sphere_check(u, P, x, tau, t, tol=1e-6, column=0):
    """Compare H(2τ)H(t) with H(τ)H(2t) for 0 < τ < t.

    With ``column=None`` every column of a multi-column field is checked and
    a list of reports is returned.
    """
    if not 0 < tau < t:
        raise ValueError("need 0 < tau < t")
    I = integrator(u, P)
    x = np.asarray(x, dtype=float)
    _, ok = _certify(P, x, 2 * t)
    H = I.moments(x, [tau, 2 * tau, t, 2 * t])[1]
    err = getattr(I, "last_error", None) or 0.0
    reps = [FourSphereReport(float(tau), float(t), float(h[1] * h[2]), float(h[0] * h[3]), ok,
                             tol + 4 * err) for h in H.T]
    return reps if column is None else reps[column]


# ------------------------------------------------------------ propagation


@dataclass
class CurveSpec:
    points: np.ndarray  # polyline vertices, γ(0) first
    r: float
    R: float
    C1: float
    C2: float

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))

    @property
    def origin(self):
        return self.points[0]

    @property
    def target(self):
        return self.points[-1]

    @property
    def length(self):
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())

    def samples(self, spacing):
        out = [self.points[0]]
        for a, b in zip(self.points[:-1], self.points[1:]):
            L = np.linalg.norm(b - a)
            k = max(1, int(math.ceil(L / spacing)))
            out.extend(a + (b - a) * (i / k) for i in range(1, k + 1))
        return np.array(out)


@dataclass
class PropagationReport:
    N_x: float
    N_0: float
    C_emp: float
    bound: float
    conditions: dict = field(default_factory=dict)

    @property
    def holds(self):
        return self.C_emp <= self.bound

    def as_dict(self):
        return dict(self.__dict__, holds=self.holds)


def propagation_bound(C1, C2):
    return (1 + math.log2(C1)) * 2 ** C2


def check_curve(P, curve, tol=None):
    """Hypotheses of the propagation estimate; raises HypothesisFailure naming the first miss.

    Condition labels follow the hypothesis list: (ii) holds the 4r
    containment and star-shape requirement, (iii) the length bound.
    """
    tol = P.tol * 10 if tol is None else tol
    c = curve
    o2 = c.origin[:2]
    if P.boundary_distance(o2) > tol:
        raise HypothesisFailure("curve must start on the boundary", "i")
    if np.linalg.norm(c.target - c.origin) >= c.R / 2:
        raise HypothesisFailure("endpoint must lie in the half-radius ball", "i")
    s = c.samples(c.r / 4)
    if not np.all(P.contains(s[:, :2])) or np.any(np.linalg.norm(s - c.origin, axis=1) >= c.R):
        raise HypothesisFailure("curve leaves the closed domain or the ball", "i")
    if not 0 < c.r < c.R / 4:
        raise HypothesisFailure("need 0 < r < R/4", "ii")
    R1 = min(c.R, c.C1 * c.r)
    for y in s:
        if np.linalg.norm(y - c.origin) + 4 * c.r > R1 * (1 + 1e-12):
            raise HypothesisFailure(f"B(γ(s), 4r) is not inside B(0, {R1:.6g})", "ii")
        _, ok = _certify(P, y, 4 * c.r)
        if not ok:
            raise HypothesisFailure(f"B(γ(s), 4r) is not star-shaped at {y.tolist()}", "ii")
    if c.length > c.C2 * c.r * (1 + 1e-12):
        raise HypothesisFailure(f"curve length {c.length:.6g} exceeds C2 r", "iii")
    _, ok = _certify(P, c.origin, c.R)
    if not ok:
        raise HypothesisFailure("B(0, R) is not star-shaped with respect to 0", "iv")
    return {"i": True, "ii": True, "iii": True, "iv": True, "samples": len(s)}


def propagation_check(u, P, curve, column=0):
    conds = check_curve(P, curve)
    I = integrator(u, P)
    mx = I.moments(curve.target, [curve.r, 2 * curve.r])[0][:, column]
    m0 = I.moments(curve.origin, [curve.R / 2, curve.R])[0][:, column]
    N_x = float(np.log2(mx[1] / mx[0]))
    N_0 = float(np.log2(m0[1] / m0[0]))
    return PropagationReport(N_x, N_0, N_x / N_0, propagation_bound(curve.C1, curve.C2), conds)


def chart_curves(P, r, R, origins=None, legs=(1.0, 1.0)):
    """Candidate curves from boundary points: up the chart axis, then along the facet.

    Each origin o gets the polyline o -> o + a e_up -> o + a e_up + b e_tan with
    (a, b) = legs * r.  C1 and C2 are the smallest values the polyline needs,
    so only the star-shape conditions can fail.  Returns (admissible, rejected)
    where rejected holds (curve, HypothesisFailure) pairs.
    """
    from .polytope import chart_frame

    if origins is None:
        a, b = P.edges
        origins = np.concatenate([P.vertices, 0.5 * (a + b), 0.75 * a + 0.25 * b])
    ok, bad = [], []
    for o in np.atleast_2d(np.asarray(origins, dtype=float)):
        frame = chart_frame(P, o)
        up = np.asarray(frame.up)
        tan = np.array([-up[1], up[0]])
        pts = np.array([frame.origin, frame.origin + legs[0] * r * up,
                        frame.origin + legs[0] * r * up + legs[1] * r * tan])
        reach = float(np.linalg.norm(pts - pts[0], axis=1).max())
        length = float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())
        curve = CurveSpec(pts, r, R, (reach + 4 * r) / r, length / r)
        try:
            check_curve(P, curve)
            ok.append(curve)
        except HypothesisFailure as exc:
            bad.append((curve, exc))
    return ok, bad


# ------------------------------------------------------------ eigen survey


def eigen_doubling_survey(P, pairs, centers, r, rtol=1e-6):
    """N of each lifted eigenfunction at each centre (x, t); rows per (index, centre)."""
    mesh = pairs[0].mesh
    V = np.stack([p.nodal for p in pairs], axis=1)
    lam = np.array([p.value for p in pairs])
    I = LiftedIntegrator(MeshIntegrator(mesh, V, P), lam, rtol=rtol)
    rows = []
    for c in centers:
        c = np.asarray(c, dtype=float)
        m = I.moments(c, [r, 2 * r])[0]
        ref = I.reference_mass(c, 2 * r)
        noise = (m <= NOISE_FACTOR * EPS * ref).any(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            N = np.log2(m[1] / m[0])
        for j, p in enumerate(pairs):
            rows.append({
                "index": p.index,
                "lambda": p.value,
                "center": c.tolist(),
                "r": float(r),
                "N": None if noise[j] else float(N[j]),
                "N_over_sqrt_lambda": None if noise[j] else float(N[j] / math.sqrt(p.value)),
                "noise_floor": bool(noise[j]),
            })
    return rows


def survey_sup(rows):
    """sup over centres of N/√λ for each eigen index."""
    out = {}
    for row in rows:
        v = row["N_over_sqrt_lambda"]
        if v is None:
            continue
        k = row["index"]
        out[k] = max(out.get(k, -math.inf), v)
    return out


def loglog_slope(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    ok = (x > 0) & (y > 0)
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])
