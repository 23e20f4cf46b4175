import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from oracles import half_ball_lifted, monte_carlo_mass
from nodalpoly.doubling import (
    AnalyticIntegrator,
    CurveSpec,
    HomogeneousHarmonic,
    LiftedIntegrator,
    MeshIntegrator,
    SumField,
    ball_mass,
    chart_curves,
    check_curve,
    doubling,
    eigen_doubling_survey,
    four_sphere_check,
    frequency_profile,
    frequency_profiles,
    local_mesh_size,
    loglog_slope,
    monotonicity_check,
    propagation_bound,
    propagation_check,
    radius_grid,
    resolved_r_min,
    survey_sup,
)
from nodalpoly.errors import CertificateFailure, HypothesisFailure, NoiseFloor
from nodalpoly.mesh import DiscreteField, generate_mesh, interpolate
from nodalpoly.polytope import NAMED, build_polytope
from nodalpoly.spectral import exact_square_mode


def big_box():
    return build_polytope(vertices=[[-10, -10], [10, -10], [10, 10], [-10, 10]])


def half_plane():
    return build_polytope(vertices=[[-10, 0], [10, 0], [10, 10], [-10, 10]])


def x2():
    # Re(-i z) = x2
    return HomogeneousHarmonic(1, phase=math.pi / 2)


def analytic(P, u):
    return AnalyticIntegrator(P, u, u.gradient)


def lifted_pairs(pairs, P, count):
    V = np.stack([p.nodal for p in pairs[:count]], axis=1)
    return LiftedIntegrator(MeshIntegrator(pairs[0].mesh, V, P),
                            np.array([p.value for p in pairs[:count]]))


# ------------------------------------------------------------ ball mass


def test_unit_field_disk_area(square, square_mesh):
    one = interpolate(square_mesh, lambda p: np.ones(len(p)))
    assert_allclose(ball_mass(one, square, [0.5, 0.5], 0.25), math.pi / 16, rtol=1e-12)


def test_unit_field_clipped_by_corner(square, square_mesh):
    one = interpolate(square_mesh, lambda p: np.ones(len(p)))
    assert_allclose(ball_mass(one, square, [0.0, 0.0], 0.5), math.pi / 16, rtol=1e-12)


def test_half_plane_x2_mass_scaling():
    P = half_plane()
    I = analytic(P, x2())
    for r in (0.3, 1.0, 2.5):
        # ∫_{B_r^+} y^2 = r^4 π/8
        assert_allclose(ball_mass(I, P, [0, 0], r), r ** 4 * math.pi / 8, rtol=1e-12)
    assert_allclose(doubling(I, P, [0, 0], 0.7), 4.0, atol=1e-12)


def test_mesh_mass_matches_exact_p1_integral(lshape_mesh, lshape, rng):
    # the ball covering everything reduces to the global mass-matrix integral
    from nodalpoly.spectral import assemble

    v = rng.standard_normal(len(lshape_mesh.nodes))
    _, M = assemble(lshape_mesh)
    assert_allclose(ball_mass(DiscreteField(lshape_mesh, v), lshape, [0, 0], 3.0), v @ (M @ v),
                    rtol=1e-12)


@pytest.mark.slow
def test_mesh_mass_monte_carlo(lshape, lshape_mesh):
    rng = np.random.default_rng(5)
    v = rng.standard_normal(len(lshape_mesh.nodes))
    v[lshape_mesh.boundary] = 0
    f = DiscreteField(lshape_mesh, v)
    x, r = np.array([0.1, -0.1]), 0.45
    exact = ball_mass(f, lshape, x, r)
    # 10^7 samples in ten batches
    est = np.array([monte_carlo_mass(f, lshape, x, r, 10 ** 6, rng) for _ in range(10)])
    mean = est[:, 0].mean()
    se = math.sqrt(np.sum(est[:, 1] ** 2)) / 10
    assert abs(mean - exact) <= 3 * se


def test_lifted_mass_matches_tensor_oracle(square):
    m = exact_square_mode(1, 1)
    I = LiftedIntegrator(analytic(square, m), m.value, rtol=1e-10, nmax=4096)
    for c, r in (([0.5, 0.0, 0.1], 0.2), ([0.3, 0.0, -0.2], 0.25)):
        M, H, _ = I.moments(np.array(c), [r])
        mo, ho = half_ball_lifted(m, m.value, c, r)
        assert_allclose(M[0, 0], mo, rtol=1e-7)
        assert_allclose(H[0, 0], ho, rtol=1e-7)


def test_lifted_doubling_at_boundary_centre(square):
    m = exact_square_mode(1, 1)
    I = LiftedIntegrator(analytic(square, m), m.value, rtol=1e-10, nmax=4096)
    c = [0.5, 0.0, 0.0]
    N = doubling(I, square, c, 0.1)
    mo = [half_ball_lifted(m, m.value, c, r)[0] for r in (0.1, 0.2)]
    assert_allclose(N, math.log2(mo[1] / mo[0]), atol=1e-7)


def test_zero_field_noise_floor(square_mesh, square):
    with pytest.raises(NoiseFloor):
        doubling(DiscreteField(square_mesh, np.zeros(len(square_mesh.nodes))), square,
                 [0.5, 0.5], 0.1)


def test_nonpositive_radius(square_mesh, square):
    with pytest.raises(ValueError):
        ball_mass(DiscreteField(square_mesh, np.ones(len(square_mesh.nodes))), square, [0.5, 0.5], 0)


# ------------------------------------------------------------ homogeneous calibration


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_homogeneous_disk(k):
    P = big_box()
    prof = frequency_profile(analytic(P, HomogeneousHarmonic(k)), P, [0, 0], [0.2, 0.5, 1.3])
    assert_allclose(prof.N, 2 * k + 2, atol=1e-9)
    assert_allclose(prof.beta, k, atol=1e-9)
    assert monotonicity_check(prof).violations_N == 0


def test_homogeneous_quarter_plane(square):
    # Im(z^2) = 2xy vanishes on both edges at the origin corner
    u = HomogeneousHarmonic(2, phase=math.pi / 2)
    prof = frequency_profile(analytic(square, u), square, [0, 0], [0.1, 0.2, 0.4])
    assert_allclose(prof.N, 6.0, atol=1e-9)
    assert_allclose(prof.beta, 2.0, atol=1e-9)


def test_half_plane_H_power_law():
    P = half_plane()
    prof = frequency_profile(analytic(P, x2()), P, [0, 0], [0.5, 1.0, 2.0])
    assert_allclose(prof.H, prof.radii ** 3 * math.pi / 2, rtol=1e-12)
    assert_allclose(prof.beta, 1.0, atol=1e-12)


# ------------------------------------------------------------ grids and resolution


def test_radius_grid_contains_doubles():
    r = radius_grid(0.05, 0.4)
    assert_allclose(r[0], 0.05)
    assert r[-1] <= 0.4 * (1 + 1e-12)
    for a in r:
        if 2 * a <= r[-1]:
            assert np.min(np.abs(r - 2 * a)) == 0.0


def test_resolved_r_min(lshape):
    mesh = generate_mesh(lshape, 0.05)
    r = resolved_r_min(mesh, [0, 0], 0.01)
    assert r >= 8 * local_mesh_size(mesh, [0, 0], r) * (1 - 1e-12)
    assert resolved_r_min(mesh, [0, 0], 1.0) == 1.0


# ------------------------------------------------------------ monotonicity


def test_lshape_ground_state_reentrant_monotone(lshape_pairs, lshape):
    mesh, pairs = lshape_pairs
    I = LiftedIntegrator(MeshIntegrator(mesh, pairs[0].nodal, lshape), pairs[0].value)
    r0 = resolved_r_min(mesh, [0, 0], 0.05)
    prof = frequency_profile(I, lshape, [0.0, 0.0, 0.0], radius_grid(r0, 0.45))
    assert prof.certified
    rep = monotonicity_check(prof, 1e-3)
    assert rep.passed, rep


def test_square_modes_at_vertex_monotone(square_pairs, square):
    mesh, pairs = square_pairs
    I = lifted_pairs(pairs, square, 6)
    r0 = resolved_r_min(mesh, [0, 0], 0.05)
    for prof in frequency_profiles(I, square, [0.0, 0.0], radius_grid(r0, 0.4)):
        assert prof.certified
        assert monotonicity_check(prof, 1e-3).passed


def test_uncertified_profile_is_exempt(lshape_pairs, lshape):
    mesh, pairs = lshape_pairs
    I = LiftedIntegrator(MeshIntegrator(mesh, pairs[0].nodal, lshape), pairs[0].value)
    c = [-0.5, 0.5]
    prof = frequency_profile(I, lshape, c, radius_grid(0.2, 0.6))
    assert not prof.certified
    assert monotonicity_check(prof).passed
    with pytest.raises(CertificateFailure):
        frequency_profile(I, lshape, c, radius_grid(0.2, 0.6), strict=True)


def test_profile_csv(square):
    prof = frequency_profile(analytic(big_box(), HomogeneousHarmonic(2)), big_box(), [0, 0],
                             [0.5, 1.0])
    lines = prof.to_csv().splitlines()
    assert lines[0] == "r,mass,H,D,beta,N"
    assert len(lines) == 3


def test_derivative_identity():
    P = big_box()
    u = SumField((1.0, HomogeneousHarmonic(2, phase=0.4)), (0.2, HomogeneousHarmonic(4)))
    I = analytic(P, u)
    eps = 1e-4
    for r in (0.3, 0.9):
        _, H, D = I.moments(np.zeros(2), [r * (1 - eps), r, r * (1 + eps)])
        lhs = (math.log(H[2, 0]) - math.log(H[0, 0])) / (2 * eps * r) - 1 / r
        assert_allclose(lhs, 2 * D[1, 0] / H[1, 0], rtol=1e-6)


def test_taylor_regime_interior_small_r(square_pairs, square):
    # the ground state is smooth and nonzero at the centre, so in the lifted
    # three-dimensional ball N decreases towards 3 as r -> 0
    mesh, pairs = square_pairs
    I = LiftedIntegrator(MeshIntegrator(mesh, pairs[0].nodal, square), pairs[0].value)
    Ns = [doubling(I, square, [0.5, 0.5, 0.0], r) for r in (0.2, 0.1, 0.05)]
    assert Ns[0] > Ns[1] > Ns[2]
    assert abs(Ns[2] - 3) < abs(Ns[1] - 3) < abs(Ns[0] - 3)


# ------------------------------------------------------------ four-sphere


def test_four_sphere_equality_power_law():
    P = half_plane()
    rep = four_sphere_check(analytic(P, x2()), P, [0, 0], 0.3, 0.8)
    assert rep.certified and rep.holds
    assert_allclose(rep.lhs, rep.rhs, rtol=1e-12)


def test_four_sphere_strict_mixture():
    P = half_plane()
    u = SumField((1.0, HomogeneousHarmonic(2, phase=math.pi / 2)),
                 (0.1, HomogeneousHarmonic(5, phase=math.pi / 2)))
    rep = four_sphere_check(analytic(P, u), P, [0, 0], 0.4, 1.1)
    assert rep.holds
    assert rep.lhs < rep.rhs * (1 - 1e-6)


def test_four_sphere_limit():
    P = half_plane()
    u = SumField((1.0, HomogeneousHarmonic(1, phase=math.pi / 2)),
                 (0.3, HomogeneousHarmonic(3, phase=math.pi / 2)))
    reps = [four_sphere_check(analytic(P, u), P, [0, 0], 0.5, 0.5 + d) for d in (1e-1, 1e-3, 1e-5)]
    gaps = [1 - r.lhs / r.rhs for r in reps]
    assert all(g >= -1e-12 for g in gaps)
    assert gaps[0] > gaps[1] > gaps[2]


def test_four_sphere_lifted_modes(lshape_pairs, lshape):
    _, pairs = lshape_pairs
    I = lifted_pairs(pairs, lshape, 6)
    for tau, t in ((0.15, 0.2), (0.15, 0.3), (0.2, 0.3)):
        for rep in four_sphere_check(I, lshape, [0.0, 0.0], tau, t, column=None):
            assert rep.certified and rep.holds


def test_four_sphere_rejects_bad_order(square):
    with pytest.raises(ValueError):
        four_sphere_check(analytic(square, exact_square_mode(1, 1)), square, [0, 0], 0.3, 0.2)


# ------------------------------------------------------------ propagation


def test_trivial_curve():
    P = half_plane()
    u = SumField((1.0, x2()), (0.2, HomogeneousHarmonic(3, phase=math.pi / 2)))
    R = 2.0
    curve = CurveSpec([[0.0, 0.0]], 0.24 * R, R, 4.0, 0.0)
    rep = propagation_check(analytic(P, u), P, curve)
    assert rep.C_emp <= 1 + 1e-9
    assert rep.holds
    assert_allclose(rep.bound, propagation_bound(4.0, 0.0))


def test_trivial_curve_at_quarter_radius_rejected():
    # the hypothesis asks for r strictly below R/4
    with pytest.raises(HypothesisFailure) as exc:
        check_curve(half_plane(), CurveSpec([[0.0, 0.0]], 0.5, 2.0, 4.0, 0.0))
    assert exc.value.condition == "ii"


def test_chart_curves_on_lifted_modes(square_pairs, lshape_pairs):
    checked = 0
    for P, (_, pairs) in ((NAMED["square"](), square_pairs), (NAMED["lshape"](), lshape_pairs)):
        I = lifted_pairs(pairs, P, 4)
        ok, _ = chart_curves(P, 0.05, 0.4)
        for curve in ok[:6]:
            for j in range(4):
                rep = propagation_check(I, P, curve, column=j)
                assert rep.holds, rep
                checked += 1
    assert checked >= 10


def test_curve_condition_failures(lshape, square):
    # start away from the boundary
    with pytest.raises(HypothesisFailure) as exc:
        check_curve(square, CurveSpec([[0.5, 0.5]], 0.05, 0.4, 10, 4))
    assert exc.value.condition == "i"
    # 4r ball around a point beside the reentrant corner is not star-shaped
    with pytest.raises(HypothesisFailure) as exc:
        check_curve(lshape, CurveSpec([[0.0, 0.3], [-0.05, 0.3], [-0.05, 0.05]], 0.08, 1.2, 12, 6))
    assert exc.value.condition == "ii"
    # too long for C2
    with pytest.raises(HypothesisFailure) as exc:
        check_curve(square, CurveSpec([[0.5, 0.0], [0.5, 0.05], [0.55, 0.05]], 0.05, 0.4, 8, 1))
    assert exc.value.condition == "iii"
    # B(0, R) across the reentrant corner from an edge point
    with pytest.raises(HypothesisFailure) as exc:
        check_curve(lshape, CurveSpec([[0.0, 0.1], [-0.02, 0.1]], 0.02, 0.5, 10, 2))
    assert exc.value.condition == "iv"


# ------------------------------------------------------------ eigen survey


def test_survey_square_vertices(square_pairs, square):
    _, pairs = square_pairs
    rows = eigen_doubling_survey(square, pairs[:16], [list(v) + [0.0] for v in square.vertices], 0.1)
    assert len(rows) == 16 * 4
    sup = survey_sup(rows)
    assert len(sup) == 16
    assert max(sup.values()) < 2.0
    lam = [pairs[k].value for k in sup]
    assert loglog_slope(lam, list(sup.values())) <= 0.05


def test_survey_zero_field_flagged(square_mesh, square):
    from nodalpoly.spectral import EigenPair

    z = EigenPair(1.0, np.zeros(len(square_mesh.interior)), 0, 0.0, square_mesh)
    rows = eigen_doubling_survey(square, [z], [[0.5, 0.5, 0.0]], 0.1)
    assert rows[0]["noise_floor"] and rows[0]["N"] is None
    assert survey_sup(rows) == {}

