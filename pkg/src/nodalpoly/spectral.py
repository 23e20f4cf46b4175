"""P1 Dirichlet Laplace eigenpairs, the harmonic lifting and analytic square modes."""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh, splu

from .errors import SolverDivergence
from .mesh import DiscreteField, cache_dir, cached_mesh, shape_gradients

log = logging.getLogger(__name__)

EIGEN_VERSION = 1
CLUSTER_GAP = 1e-6
RESIDUAL_TOL = 1e-8


def assemble(mesh):
    """Global stiffness and consistent mass matrices (all nodes, CSR)."""
    tris = mesh.triangles
    area = mesh.areas
    grads = shape_gradients(mesh)
    Ke = np.einsum("mid,mjd->mij", grads, grads) * area[:, None, None]
    Me = (np.ones((3, 3)) + np.eye(3))[None] * (area / 12.0)[:, None, None]
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    n = len(mesh.nodes)
    K = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((Me.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    return K, M


@dataclass
class EigenPair:
    value: float
    coeffs: np.ndarray  # values at interior nodes
    index: int
    residual: float
    mesh: object
    cluster: int = -1

    @property
    def nodal(self):
        """Values at every mesh node (zero on the boundary)."""
        v = np.zeros(len(self.mesh.nodes))
        v[self.mesh.interior] = self.coeffs
        return v

    @property
    def field(self):
        return DiscreteField(self.mesh, self.nodal)

    @property
    def sqrt_value(self):
        return math.sqrt(self.value)


def _clusters(vals, gap):
    ids = np.zeros(len(vals), dtype=int)
    for i in range(1, len(vals)):
        same = (vals[i] - vals[i - 1]) <= gap * abs(vals[i])
        ids[i] = ids[i - 1] if same else ids[i - 1] + 1
    return ids


def solve_eigen(mesh, count, cluster_gap=CLUSTER_GAP, residual_tol=RESIDUAL_TOL):
    """Lowest ``count`` Dirichlet eigenpairs by shift-invert Lanczos."""
    if count < 1:
        raise ValueError("count must be at least 1")
    K, M = assemble(mesh)
    idx = mesh.interior
    Kii = K[idx][:, idx].tocsc()
    Mii = M[idx][:, idx].tocsc()
    n = len(idx)
    if count >= n:
        raise SolverDivergence(f"{count} eigenpairs requested but only {n} interior nodes")
    # factor once; Lanczos on the shift-inverted operator at sigma = 0
    lu = splu(Kii)
    op = sp.linalg.LinearOperator((n, n), matvec=lu.solve, dtype=float)
    ncv = min(n, max(2 * count + 1, count + 20))
    v0 = np.ones(n)
    try:
        vals, vecs = eigsh(Kii, k=count, M=Mii, sigma=0.0, which="LM", OPinv=op,
                           ncv=ncv, tol=1e-13, v0=v0)
    except sp.linalg.ArpackNoConvergence as exc:
        raise SolverDivergence(str(exc)) from exc
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    pairs = []
    ids = _clusters(vals, cluster_gap)
    for k in range(count):
        v = vecs[:, k]
        v = v / math.sqrt(float(v @ (Mii @ v)))
        j = int(np.argmax(np.abs(v)))
        if v[j] < 0:
            v = -v
        lam = float(v @ (Kii @ v))  # Rayleigh quotient with M-normalised v
        r = Kii @ v - lam * (Mii @ v)
        res = float(np.linalg.norm(r) / (abs(lam) * np.linalg.norm(Mii @ v)))
        if not (lam > 0) or res > residual_tol:
            raise SolverDivergence(f"eigenpair {k}: lambda={lam}, residual={res:.3e}")
        pairs.append(EigenPair(lam, v, k, res, mesh, int(ids[k])))
    return pairs


def eigen_cache_key(P, h, count, grade_corners=False):
    text = f"{P.fingerprint}|{h!r}|{count}|{bool(grade_corners)}|v{EIGEN_VERSION}"
    return hashlib.sha256(text.encode()).hexdigest()[:20]


def solve_polytope(P, h, count, grade_corners=False, directory=None):
    """Mesh ``P`` and solve, reusing cached meshes and eigenvectors when available."""
    directory = Path(directory) if directory is not None else cache_dir()
    mesh = cached_mesh(P, h, grade_corners=grade_corners, directory=directory)
    if directory is None:
        return mesh, solve_eigen(mesh, count)
    path = directory / f"eigen-{eigen_cache_key(P, h, count, grade_corners)}.npz"
    if path.exists():
        d = np.load(path)
        if int(d["version"]) == EIGEN_VERSION:
            log.info("eigen cache hit: %s", path.name)
            return mesh, [
                EigenPair(float(d["values"][k]), d["vectors"][:, k], k, float(d["residuals"][k]),
                          mesh, int(d["clusters"][k]))
                for k in range(count)
            ]
    pairs = solve_eigen(mesh, count)
    directory.mkdir(parents=True, exist_ok=True)
    np.savez(
        path,
        version=EIGEN_VERSION,
        values=np.array([p.value for p in pairs]),
        vectors=np.stack([p.coeffs for p in pairs], axis=1),
        residuals=np.array([p.residual for p in pairs]),
        clusters=np.array([p.cluster for p in pairs]),
    )
    return mesh, pairs


def mass_inner(mesh, u, v):
    _, M = assemble(mesh)
    return float(u @ (M @ v))


# ------------------------------------------------------------------ lifting


class LiftedField:
    """u(x, t) = exp(t sqrt(lambda)) phi(x), harmonic on P x R."""

    def __init__(self, phi, value):
        self.phi = phi  # anything callable on (m, 2) points
        self.value = float(value)
        self.k = math.sqrt(self.value)

    def __call__(self, x, t):
        return np.exp(np.asarray(t) * self.k) * self.phi(x)

    def dt(self, x, t):
        return self.k * self(x, t)

    def dtt(self, x, t):
        return self.value * self(x, t)


def lift(pair):
    """Lift a computed eigenpair (or any object with .field and .value)."""
    return LiftedField(pair.field, pair.value)


# --------------------------------------------------------- analytic modes


class SquareMode:
    """sin(k pi x / a) sin(m pi y / b) on the rectangle [0,a] x [0,b]."""

    def __init__(self, k, m, a=1.0, b=1.0):
        if k < 1 or m < 1:
            raise ValueError("mode numbers must be positive")
        self.k, self.m, self.a, self.b = int(k), int(m), float(a), float(b)
        self.value = math.pi ** 2 * (k * k / a ** 2 + m * m / b ** 2)

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        x, y = pts[..., 0], pts[..., 1]
        return np.sin(self.k * np.pi * x / self.a) * np.sin(self.m * np.pi * y / self.b)

    def gradient(self, pts):
        pts = np.asarray(pts, dtype=float)
        x, y = pts[..., 0], pts[..., 1]
        kx, my = self.k * np.pi / self.a, self.m * np.pi / self.b
        return np.stack([kx * np.cos(kx * x) * np.sin(my * y),
                         my * np.sin(kx * x) * np.cos(my * y)], axis=-1)

    @property
    def nodal_lines(self):
        """Interior zero lines as ('x', c) or ('y', c)."""
        xs = [("x", self.a * j / self.k) for j in range(1, self.k)]
        ys = [("y", self.b * j / self.m) for j in range(1, self.m)]
        return xs + ys

    @property
    def nodal_length(self):
        return (self.k - 1) * self.b + (self.m - 1) * self.a

    @property
    def field(self):
        return self


def exact_square_mode(k, m, a=1.0, b=1.0):
    return SquareMode(k, m, a, b)


def square_modes(limit, a=1.0, b=1.0):
    """Analytic modes (k, m) with k, m <= limit sorted by eigenvalue."""
    modes = [SquareMode(k, m, a, b) for k in range(1, limit + 1) for m in range(1, limit + 1)]
    return sorted(modes, key=lambda s: (s.value, s.k))
