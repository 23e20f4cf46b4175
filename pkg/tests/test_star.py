import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from oracles import polygon, ray_cast_star, segment_inside, union_covers
from nodalpoly.errors import (
    ChartMiss,
    CoverageGap,
    NonPositiveRadius,
    PointOutsideDomain,
    RadiusTooLarge,
)
from nodalpoly.polytope import NAMED, chart_frame, skeleton_distance
from nodalpoly.star import (
    boundary_cover,
    cover_verify,
    max_star_radius,
    msr_lower_bounds,
    star_certificate,
    stratum,
    vertical_shift_check,
)


def test_square_center_star(square):
    cert = star_certificate(square, [0.5, 0.5], 2.0)
    assert cert.star_shaped
    assert cert.n_components == 1


def test_lshape_corner_star(lshape, rng):
    cert = star_certificate(lshape, [0.0, 0.0], 0.5)
    assert cert.star_shaped
    assert ray_cast_star(lshape, np.zeros(2), 0.5, 1000, rng) == 0


def test_lshape_violation_witness(lshape, rng):
    x = np.array([-0.5, 0.5])
    cert = star_certificate(lshape, x, 1.2)
    assert not cert.star_shaped
    i, y = cert.witness
    # the witness lies on one of the two reentrant edges and fails the normal test
    assert i in (2, 3)
    assert np.dot(y - x, lshape.facets[i].normal) < 0
    assert ray_cast_star(lshape, x, 1.2, 1000, rng) > 0


def test_certificate_errors(square):
    with pytest.raises(NonPositiveRadius):
        star_certificate(square, [0.5, 0.5], 0.0)
    with pytest.raises(PointOutsideDomain):
        star_certificate(square, [1.5, 0.5], 0.3)


def test_small_interior_ball_trivially_star(lshape):
    x = np.array([-0.4, -0.3])
    d = skeleton_distance(lshape, x, 1)
    cert = star_certificate(lshape, x, 0.99 * d)
    assert cert.star_shaped and cert.n_components == 1


def test_disconnected_intersection_uses_centre_component():
    # a U shape: a ball at the bottom of one arm also meets the other arm
    U = NAMED["tshape"]()
    x = np.array([1.4, 0.5])
    cert = star_certificate(U, x, 1.2)
    assert cert.n_components >= 1


@pytest.mark.parametrize("name", ["square", "lshape", "pentagon", "tshape"])
def test_certificate_soundness_random(name, rng):
    P = NAMED[name]()
    lo, hi = P.vertices.min(axis=0), P.vertices.max(axis=0)
    checked = 0
    while checked < 12:
        x = lo + (hi - lo) * rng.random(2)
        if not P.contains(x)[0]:
            continue
        r = P.diam * (0.05 + 0.9 * rng.random())
        cert = star_certificate(P, x, r)
        blocked = ray_cast_star(P, x, r, 300, rng)
        if cert.star_shaped:
            assert blocked == 0
        else:
            i, y = cert.witness
            assert np.dot(y - x, P.facets[i].normal) < 0 or not segment_inside(P, x, y)
        checked += 1


def test_msr_square_is_diameter(square):
    res = max_star_radius(square, [0.3, 0.6])
    assert_allclose(res.radius, math.sqrt(2))


def test_msr_lshape_reentrant_vertex(lshape):
    # the whole L-shape is star-shaped with respect to its reentrant corner
    res = max_star_radius(lshape, [0.0, 0.0])
    assert_allclose(res.radius, 2 * math.sqrt(2), atol=1e-12)
    assert ray_cast_star(lshape, np.zeros(2), res.radius, 2000, np.random.default_rng(0)) == 0


def test_msr_lshape_edge_point(lshape):
    x = np.array([0.0, 0.25])
    res = max_star_radius(lshape, x, tol=1e-10)
    lb = msr_lower_bounds(lshape, x)
    assert res.radius >= lb["generic"] - 1e-9
    assert_allclose(res.radius, 0.25, atol=1e-9)
    assert res.r_lo <= res.radius <= res.r_hi
    assert res.r_hi - res.r_lo <= 1e-10
    # oracle: the component just above R* is no longer star-shaped
    assert ray_cast_star(lshape, x, res.r_hi + 0.02, 2000, np.random.default_rng(1)) > 0
    assert ray_cast_star(lshape, x, res.radius, 2000, np.random.default_rng(1)) == 0


def test_msr_interior_point(lshape):
    x = np.array([-0.5, 0.5])
    res = max_star_radius(lshape, x, tol=1e-10)
    assert_allclose(res.radius, math.sqrt(0.5), atol=1e-9)


def test_lower_bounds_examples(square, lshape):
    lb = msr_lower_bounds(square, [0.5, 0.5])
    assert_allclose(lb["generic"], math.sqrt(2) / 2)
    assert lb["stratum_dim"] == 2
    lb = msr_lower_bounds(square, [0.0, 0.0])
    assert lb["stratum_dim"] == 0
    assert_allclose(lb["vertex"], 1.0)
    lb = msr_lower_bounds(lshape, [0.5, 0.0])
    assert lb["stratum_dim"] == 1
    assert_allclose(lb["stratum"], lshape.face_constant.c_star * 0.5)


def test_stratum(lshape):
    assert stratum(lshape, [0, 0]) == 0
    assert stratum(lshape, [0.5, 0]) == 1
    assert stratum(lshape, [-0.5, -0.5]) == 2


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 1), st.floats(-0.03, 0.03), st.floats(-0.03, 0.03))
def test_lower_bounds_dominated(s, dx, dy):
    P = NAMED["lshape"]()
    x = P.boundary_points(1, offset=s)[0] + np.array([dx, dy])
    if not P.contains(x)[0]:
        x = P.boundary_points(1, offset=s)[0]
    res = max_star_radius(P, x, bounds=False)
    lb = msr_lower_bounds(P, x)
    for key in ("generic", "stratum", "vertex"):
        if lb[key]:
            # the true radius lies in [r_lo, r_hi]; the bound may be sharp
            assert res.r_hi >= lb[key] - 1e-12
            assert star_certificate(P, x, lb[key] * (1 - 1e-9)).star_shaped


def test_vertical_shift_square(square):
    frame = chart_frame(square, [0.5, 0.0])
    # chart radius 0.5 gives R** = min(sqrt 2, 0.125), so t may go up to 0.0625
    chk = vertical_shift_check(square, [0.5, 0.0], frame, 0.05)
    assert chk.holds
    assert_allclose(chk.r_double_star, 0.125)
    # a convex domain is star-shaped from every point, so the radius is capped at diam
    assert_allclose(chk.r_star_shifted, math.sqrt(2))
    with pytest.raises(ValueError):
        vertical_shift_check(square, [0.5, 0.0], frame, 0.07)


def test_vertical_shift_reentrant_corner(lshape):
    frame = chart_frame(lshape, [0.0, 0.0])
    chk = vertical_shift_check(lshape, [0.0, 0.0], frame, 0.1)
    assert chk.holds
    assert_allclose(chk.r_double_star, 0.25)
    edge = 0.5 * chk.r_double_star
    assert vertical_shift_check(lshape, [0.0, 0.0], frame, edge).holds
    with pytest.raises(ValueError):
        vertical_shift_check(lshape, [0.0, 0.0], frame, 1.01 * edge)


def test_vertical_shift_chart_miss(square):
    frame = chart_frame(square, [0.5, 0.0])
    with pytest.raises(ChartMiss):
        vertical_shift_check(square, [0.5, 0.9], frame, 0.1)


def test_cover_too_large(square):
    with pytest.raises(RadiusTooLarge):
        boundary_cover(square, 1.5)


@pytest.fixture(scope="module")
def square_cover():
    P = NAMED["square"]()
    return P, boundary_cover(P, P.vertex_separation)


def test_square_cover_structure(square_cover):
    P, cover = square_cover
    lv0 = cover.level(0)
    assert len(lv0) == 4
    assert_allclose(np.array([b.center for b in lv0]), P.vertices)
    for b in cover.level(1):
        # level-1 centres lie on edges away from the vertices
        assert skeleton_distance(P, b.center, 1) <= 1e-12
        assert skeleton_distance(P, b.center, 0) > 0
    assert all(b.certificate.star_shaped for b in cover.balls)


def test_square_cover_covers(square_cover):
    P, cover = square_cover
    rep = cover_verify(P, cover, samples=100_000)
    assert rep["gaps"] == 0 and rep["certificate_failures"] == 0
    # independent check at 1e-3 diam spacing
    pts = P.boundary_points(int(P.perimeter / (1e-3 * P.diam)))
    balls = [(b.center, b.covering_radius) for b in cover.balls]
    assert union_covers(balls, pts).all()


def test_cover_deleted_ball_gap(square_cover):
    P, cover = square_cover
    with pytest.raises(CoverageGap) as exc:
        cover_verify(P, cover.without(0), samples=20_000)
    w = exc.value.witness
    assert np.linalg.norm(w - P.vertices[0]) < cover.balls[0].covering_radius


def test_cover_shrunk_gap(square_cover):
    P, cover = square_cover
    with pytest.raises(CoverageGap):
        cover_verify(P, cover.with_radii_scaled(0.01), samples=20_000, recertify=False)


@pytest.mark.slow
@pytest.mark.parametrize("name", ["lshape", "pentagon"])
def test_cover_other_polygons(name):
    P = NAMED[name]()
    cover = boundary_cover(P, P.vertex_separation)
    rep = cover_verify(P, cover, samples=100_000)
    assert len(cover.level(0)) == len(P.vertices)
    assert rep["gaps"] == 0 and rep["certificate_failures"] == 0
    assert rep["max_multiplicity"] <= 8


def test_cover_certificates_match_oracle(square_cover, rng):
    P, cover = square_cover
    idx = rng.choice(len(cover.balls), 5, replace=False)
    for i in idx:
        b = cover.balls[i]
        assert ray_cast_star(P, b.center, b.certified_radius, 200, rng) == 0
    assert polygon(P).area == pytest.approx(1.0)
