import numpy as np
import pytest
from numpy.testing import assert_allclose
from shapely.geometry import Point

from oracles import brute_locate, polygon
from nodalpoly.errors import MeshFailure, PointOutsideDomain
from nodalpoly.mesh import DiscreteField, Mesh, cached_mesh, generate_mesh, interpolate
from nodalpoly.polytope import NAMED


def _conforming(mesh):
    # every interior edge is shared by exactly two triangles, boundary edges by one
    t = mesh.triangles
    e = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
    _, counts = np.unique(e, axis=0, return_counts=True)
    return set(counts.tolist()) <= {1, 2}


def test_square_h01_quality(square):
    mesh = generate_mesh(square, 0.1)
    assert 200 <= len(mesh.triangles) <= 400
    assert mesh.min_angle >= 20.0
    assert mesh.max_edge <= 0.1 + 1e-12
    assert np.all(mesh.areas > 0)
    assert_allclose(mesh.areas.sum(), 1.0, rtol=1e-12)
    assert _conforming(mesh)


def test_lshape_keeps_reentrant_vertex(lshape_mesh, lshape):
    for v in lshape.vertices:
        assert np.min(np.linalg.norm(lshape_mesh.nodes - v, axis=1)) == 0.0
    assert lshape_mesh.min_angle >= 20.0
    assert_allclose(lshape_mesh.areas.sum(), polygon(lshape).area, rtol=1e-12)
    assert _conforming(lshape_mesh)


@pytest.mark.parametrize("name", ["lshape", "pentagon", "tshape"])
def test_boundary_nodes_on_boundary(name):
    P = NAMED[name]()
    mesh = generate_mesh(P, 0.1)
    ring = polygon(P).exterior
    d = np.array([ring.distance(Point(*p)) for p in mesh.nodes[mesh.boundary]])
    assert d.max() <= 1e-12 * P.diam
    # boundary edges of the triangulation are exactly the edges between boundary nodes on the ring
    be = mesh.boundary_edges
    assert np.all(mesh.boundary[be])
    assert_allclose(np.linalg.norm(mesh.nodes[be[:, 0]] - mesh.nodes[be[:, 1]], axis=1).sum(),
                    ring.length, rtol=1e-12)


def test_graded_mesh_refines_corner(lshape):
    plain = generate_mesh(lshape, 0.05)
    graded = generate_mesh(lshape, 0.05, grade_corners=True)
    def near(m):
        return np.sum(np.linalg.norm(m.nodes, axis=1) < 0.05)

    assert near(graded) > near(plain)
    assert graded.min_angle >= 20.0


def test_nonpositive_h_rejected(square):
    with pytest.raises(MeshFailure):
        generate_mesh(square, 0.0)
    with pytest.raises(MeshFailure):
        generate_mesh(square, -0.1)


def test_save_load_roundtrip(square_mesh, tmp_path):
    path = tmp_path / "m.npz"
    square_mesh.save(path)
    back = Mesh.load(path)
    assert np.array_equal(back.nodes, square_mesh.nodes)
    assert np.array_equal(back.triangles, square_mesh.triangles)
    assert np.array_equal(back.boundary, square_mesh.boundary)


def test_mesh_cache_hit(square, tmp_path):
    a = cached_mesh(square, 0.1, directory=tmp_path)
    assert len(list(tmp_path.glob("mesh-*.npz"))) == 1
    b = cached_mesh(square, 0.1, directory=tmp_path)
    assert np.array_equal(a.nodes, b.nodes) and np.array_equal(a.triangles, b.triangles)


def test_evaluate_at_nodes(square_mesh, rng):
    vals = rng.standard_normal(len(square_mesh.nodes))
    f = DiscreteField(square_mesh, vals)
    idx = rng.choice(len(vals), 50, replace=False)
    assert_allclose(f(square_mesh.nodes[idx]), vals[idx], rtol=0, atol=1e-13)


def test_evaluate_at_centroids(square_mesh, rng):
    vals = rng.standard_normal(len(square_mesh.nodes))
    f = DiscreteField(square_mesh, vals)
    cent = square_mesh.nodes[square_mesh.triangles].mean(axis=1)
    assert_allclose(f(cent), vals[square_mesh.triangles].mean(axis=1), atol=1e-13)


def test_point_location_matches_brute_force(lshape_mesh, lshape, rng):
    pts = rng.uniform(-1, 1, (400, 2))
    pts = pts[lshape.contains(pts)]
    vals = rng.standard_normal(len(lshape_mesh.nodes))
    f = DiscreteField(lshape_mesh, vals)
    tri, lam = f.locate(pts)
    hits = brute_locate(lshape_mesh, pts)
    # a point on a shared edge may be claimed by any triangle that contains it
    for t, ok in zip(tri, hits):
        assert t in ok
    assert_allclose(lam.sum(axis=1), 1.0, atol=1e-14)


def test_linear_fields_reproduced(lshape_mesh, lshape, rng):
    f = interpolate(lshape_mesh, lambda p: 2 * p[:, 0] - 3 * p[:, 1] + 0.5)
    pts = rng.uniform(-1, 1, (300, 2))
    pts = pts[lshape.contains(pts)]
    assert_allclose(f(pts), 2 * pts[:, 0] - 3 * pts[:, 1] + 0.5, atol=1e-12)
    assert_allclose(f.gradients, np.tile([2.0, -3.0], (len(lshape_mesh.triangles), 1)), atol=1e-10)


def test_evaluate_outside_raises(lshape_mesh):
    f = DiscreteField(lshape_mesh, np.zeros(len(lshape_mesh.nodes)))
    with pytest.raises(PointOutsideDomain):
        f([0.5, 0.5])
