import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from oracles import cluster_projection
from nodalpoly.doubling import HomogeneousHarmonic
from nodalpoly.errors import CertificateFailure, FlatnessViolation, ResolutionGuard
from nodalpoly.mesh import DiscreteField, generate_mesh, interpolate
from nodalpoly.nodal import (
    RHO_MAX,
    Ball,
    BoundaryLayer,
    VertexShell,
    extract_nodal_set,
    flat_bound_for_field,
    local_flat_bound_check,
    nodal_measure,
    resolution_guard,
    segment_lengths_in,
    shell_accounting,
    trend_slope,
    yau_upper_survey,
)
from nodalpoly.polytope import NAMED, build_polytope
from nodalpoly.spectral import exact_square_mode, solve_eigen, solve_polytope, square_modes


def hausdorff(seg_pts, line_pts):
    from scipy.spatial.distance import directed_hausdorff

    return max(directed_hausdorff(seg_pts, line_pts)[0], directed_hausdorff(line_pts, seg_pts)[0])


# ------------------------------------------------------------ extraction


def test_linear_field_vertical_line(square):
    h = 0.05
    mesh = generate_mesh(square, h)
    z = extract_nodal_set(interpolate(mesh, lambda p: p[:, 0] - 0.3))
    # a linear field is reproduced exactly, so the chain is the segment itself
    assert_allclose(z.length, 1.0, rtol=1e-12)
    pts = z.segments.reshape(-1, 2)
    line = np.column_stack([np.full(201, 0.3), np.linspace(0, 1, 201)])
    assert hausdorff(pts, line) <= h
    assert_allclose(pts[:, 0], 0.3, atol=1e-12)


def test_constant_sign_field_empty(square_mesh):
    z = extract_nodal_set(interpolate(square_mesh, lambda p: 1 + p[:, 0] ** 2))
    assert len(z) == 0 and z.length == 0.0


def test_dirichlet_boundary_excluded(square_mesh):
    # positive inside, zero on the boundary: the boundary is not part of the interior nodal set
    m = exact_square_mode(1, 1)
    z = extract_nodal_set(interpolate(square_mesh, m))
    assert len(z) == 0


def test_ground_state_no_interior_zeros(square_pairs):
    _, pairs = square_pairs
    assert extract_nodal_set(pairs[0].field).length == 0.0


def test_separable_mode_converges():
    P = NAMED["square"]()
    m = exact_square_mode(2, 1)
    line = np.column_stack([np.full(201, 0.5), np.linspace(0, 1, 201)])
    for h in (0.05, 0.02, 0.01):
        z = extract_nodal_set(interpolate(generate_mesh(P, h), m))
        # O(h) length error and Hausdorff distance at most h
        assert abs(z.length - 1.0) <= h
        assert hausdorff(z.segments.reshape(-1, 2), line) <= h


def test_segments_inside_source_triangles(lshape_pairs):
    mesh, pairs = lshape_pairs
    z = extract_nodal_set(pairs[5].field)
    p = mesh.nodes[mesh.triangles[z.triangles]]
    for k in range(2):
        q = z.segments[:, k]
        a, b, c = p[:, 0], p[:, 1], p[:, 2]
        det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1])
        l1 = ((q[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (c[:, 0] - a[:, 0]) * (q[:, 1] - a[:, 1])) / det
        l2 = ((b[:, 0] - a[:, 0]) * (q[:, 1] - a[:, 1]) - (q[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1])) / det
        lam = np.stack([1 - l1 - l2, l1, l2], axis=1)
        assert lam.min() >= -1e-10
        # endpoints lie on an edge: one barycentric weight vanishes
        assert np.all(np.abs(lam).min(axis=1) <= 1e-10)
    # the field vanishes at every endpoint
    assert_allclose(pairs[5].field(z.segments.reshape(-1, 2)), 0.0, atol=1e-12)


def test_zero_triangle_flagged(square_mesh):
    v = square_mesh.nodes[:, 0] - 0.5
    t = int(np.argmin(np.linalg.norm(square_mesh.nodes[square_mesh.triangles].mean(axis=1) - 0.5, axis=1)))
    v = v.copy()
    v[square_mesh.triangles[t]] = 0.0
    z = extract_nodal_set(DiscreteField(square_mesh, v))
    assert t in z.zero_triangles
    assert_allclose(z.zero_area, square_mesh.areas[z.zero_triangles].sum())
    assert t not in z.triangles


def test_nodal_csv(square_mesh):
    z = extract_nodal_set(interpolate(square_mesh, lambda p: p[:, 1] - 0.41))
    lines = z.to_csv().splitlines()
    assert lines[0] == "x1,y1,x2,y2,triangle,shell"
    assert len(lines) == len(z) + 1


# ------------------------------------------------------------ measure


@pytest.mark.parametrize("k,m", [(3, 2), (2, 3), (4, 1), (4, 4)])
def test_separable_lengths_interpolant(k, m):
    mesh = generate_mesh(NAMED["square"](), 0.01)
    mode = exact_square_mode(k, m)
    z = extract_nodal_set(interpolate(mesh, mode))
    assert_allclose(z.length, (k - 1) + (m - 1), rtol=0.02)


def test_cluster_projection_lengths(square):
    mesh, pairs = solve_polytope(square, 0.02, 12)
    modes = square_modes(6)
    exact = [m.value for m in modes]
    for mode in modes[:10]:
        f = cluster_projection(mesh, pairs, mode, exact)
        assert_allclose(extract_nodal_set(f).length, mode.nodal_length, rtol=0.02, atol=1e-12)


def test_additivity_partitions(lshape_pairs, lshape):
    _, pairs = lshape_pairs
    z = extract_nodal_set(pairs[9].field)
    total = z.length
    for region in (Ball([0, 0], 0.4), BoundaryLayer(lshape, 0.1), VertexShell(lshape, 0.1, 0.3),
                   Ball([-0.3, 0.2], 0.35) & BoundaryLayer(lshape, 0.2)):
        inside = nodal_measure(z, region)
        outside = nodal_measure(z, ~region)
        assert_allclose(inside + outside, total, rtol=1e-12)
    # a three-way split by nested balls
    parts = [Ball([0, 0], 0.3), Ball([0, 0], 0.8) & ~Ball([0, 0], 0.3), ~Ball([0, 0], 0.8)]
    assert_allclose(sum(nodal_measure(z, r) for r in parts), total, rtol=1e-12)


def test_ball_clipping_exact():
    seg = np.array([[[-2.0, 0.0], [2.0, 0.0]], [[0.0, 0.5], [3.0, 0.5]]])
    L = segment_lengths_in(seg, Ball([0, 0], 1.0))
    assert_allclose(L, [2.0, math.sqrt(0.75)], rtol=1e-14)


@pytest.mark.slow
def test_lshape_mesh_convergence():
    # h versus h/2; nodal crossings of higher modes need h = 0.01 to settle
    P = NAMED["lshape"]()
    L = []
    for h in (0.01, 0.005):
        _, pairs = solve_polytope(P, h, 8)
        L.append(np.array([extract_nodal_set(p.field).length for p in pairs]))
    assert L[0][0] == 0.0 and L[1][0] == 0.0
    assert_allclose(L[0][1:], L[1][1:], rtol=0.01)


# ------------------------------------------------------------ flat bound


@pytest.fixture(scope="module")
def box_mesh():
    P = build_polytope(vertices=[[-1, -1], [1, -1], [1, 1], [-1, 1]])
    return P, generate_mesh(P, 0.02)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_flat_bound_homogeneous(box_mesh, k):
    P, mesh = box_mesh
    h, r = mesh.h, 0.1
    f = interpolate(mesh, HomogeneousHarmonic(k, phase=0.1))
    rep = flat_bound_for_field(f, P, [0.0, 0.0], r)
    # 2k nodal rays of length r, each within O(h); B(0, 8r) stays inside the box,
    # so N(0, 4r) of the interpolant is close to 2k + 2
    assert abs(rep.length - 2 * k * r) <= k * h
    assert_allclose(rep.N, 2 * k + 2, rtol=0.01)
    assert abs(rep.rho - 2 * k / (2 * k + 3)) <= k * h / ((2 * k + 3) * r) + 0.01
    assert rep.holds


def test_flat_bound_half_plane():
    P = build_polytope(vertices=[[-1, 0], [1, 0], [1, 1], [-1, 1]])
    mesh = generate_mesh(P, 0.02)
    f = interpolate(mesh, lambda p: p[:, 1])
    rep = flat_bound_for_field(f, P, [0.0, 0.0], 0.1)
    assert rep.length == 0.0 and rep.rho == 0.0
    assert_allclose(rep.N, 4.0, atol=1e-9)


def test_flat_bound_square_mode_edge(square_pairs, square):
    _, pairs = square_pairs
    rep = flat_bound_for_field(pairs[3].field, square, [0.5, 0.0], 0.05)
    assert rep.length > 0 and rep.holds


def test_flatness_violation(square):
    with pytest.raises(FlatnessViolation):
        local_flat_bound_check(square, [0.1, 0.0], 0.05, 0.1, 1.0)


def test_rho_max_calibration():
    assert_allclose(RHO_MAX, 10 * 10 / 13)


# ------------------------------------------------------------ shells


def test_shells_square_vertex(square_pairs, square):
    _, pairs = square_pairs
    f = pairs[12].field
    sd = shell_accounting(square, f, [0.0, 0.0], 0.8)
    assert sd.K >= 3
    # n = 2: the ball count per shell stays bounded
    assert sd.ball_counts.max() <= 4 * sd.ball_counts.min() + 8
    assert_allclose(sd.total + sd.unresolved, sd.ball_length, rtol=0.01, atol=1e-12)


def test_shells_disjoint_cover(lshape_pairs, lshape):
    _, pairs = lshape_pairs
    f = pairs[20].field
    sd = shell_accounting(lshape, f, [0.0, 0.0], 0.8)
    assert_allclose(sd.total + sd.unresolved, sd.ball_length, rtol=1e-12, atol=1e-14)
    assert np.all(sd.constants >= 0)


def test_shells_empty_nodal_set(square_pairs, square):
    _, pairs = square_pairs
    sd = shell_accounting(square, pairs[0].field, [0.0, 0.0], 0.8)
    assert np.all(sd.lengths == 0.0) and sd.unresolved == 0.0


def test_shells_certificate_failure(lshape_pairs, lshape):
    _, pairs = lshape_pairs
    with pytest.raises(CertificateFailure):
        shell_accounting(lshape, pairs[3].field, [-0.5, 0.5], 1.5)


# ------------------------------------------------------------ survey


def test_square_closed_form_ratio():
    ratios = [(m.k + m.m - 2) / (math.pi * math.hypot(m.k, m.m))
              for m in square_modes(4)]
    assert max(ratios) <= math.sqrt(2) / math.pi
    # the bound is approached along the diagonal k = m
    for k in (10, 100, 1000):
        diag = (2 * k - 2) / (math.pi * math.sqrt(2) * k)
        assert_allclose(diag, math.sqrt(2) / math.pi * (1 - 1 / k), rtol=1e-14)


def test_rectangle_ratio_matches_closed_form():
    P = NAMED["rectangle"]()
    mesh, pairs = solve_polytope(P, 0.02, 12)
    modes = square_modes(8, 2.0, 1.0)
    exact = [m.value for m in modes]
    for mode in modes[:10]:
        f = cluster_projection(mesh, pairs, mode, exact)
        measured = extract_nodal_set(f).length / math.sqrt(mode.value)
        closed = ((mode.k - 1) * 1.0 + (mode.m - 1) * 2.0) / math.sqrt(mode.value)
        assert_allclose(measured, closed, rtol=0.02, atol=1e-12)


def test_lshape_survey_bounded(lshape_pairs, lshape):
    _, pairs = lshape_pairs
    s = yau_upper_survey(lshape, pairs)
    assert len(s.rows) == 30
    assert s.rows[0]["ratio"] == 0.0
    assert 0 < s.max_ratio < 1.0
    assert set(s.cluster_max) == {p.cluster for p in pairs}
    assert s.to_csv().splitlines()[0] == "k,lambda,length,ratio,cluster"


def test_survey_needs_ten_pairs(square_pairs, square):
    _, pairs = square_pairs
    with pytest.raises(ValueError):
        yau_upper_survey(square, pairs[:5])


def test_resolution_guard(square):
    pairs = solve_eigen(generate_mesh(square, 0.2), 10)
    with pytest.raises(ResolutionGuard):
        resolution_guard(pairs, 0.2)
    with pytest.raises(ResolutionGuard):
        yau_upper_survey(square, pairs)


def test_trend_slope_exact_power():
    lam = np.array([1.0, 2.0, 4.0, 8.0, 16.0])
    assert_allclose(trend_slope(lam, lam ** 0.25, skip=0), 0.25)
    assert_allclose(trend_slope(lam, np.ones(5)), 0.0, atol=1e-12)
