import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import cap_area_quadrature, latitude_total_curvature, latitude_holonomy, rotation_z
from spinroll.errors import DomainClampWarning, DomainError, PoleError
from spinroll.geometry import (HALF_PI, PI, PlanePoint, SpherePoint, cap_spin_change, chord_error, chord_errors,
                               clamped_asin, embed_uv, helicoid_curvatures_reference, helicoid_embed,
                               helicoid_torsion, plane_curvatures, rotate_to_goal_frame, sphere_curvatures,
                               sphere_embed, wrap_angle, zx_zy_angles)

angles = st.floats(-PI, PI, allow_nan=False)
wide_angles = st.floats(-50.0, 50.0, allow_nan=False)
radii = st.floats(0.05, 5.0, allow_nan=False)


# --------------------------------------------------------------------------- wrapping

@given(wide_angles)
def test_wrap_angle_range_and_equivalence(a):
    w = wrap_angle(a)
    assert -PI <= w < PI
    assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)
    assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-9)


def test_wrap_angle_array_matches_scalar():
    a = np.linspace(-20, 20, 101)
    np.testing.assert_allclose(wrap_angle(a), [wrap_angle(float(x)) for x in a], atol=1e-12)


def test_sphere_point_normalizes():
    p = SpherePoint(3 * PI, -PI)
    assert p.u_o == pytest.approx(-PI)
    assert p.v_o == pytest.approx(-PI)


def test_plane_point_rejects_non_finite():
    with pytest.raises(ValueError):
        PlanePoint(math.nan, 0.0)


def test_clamped_asin_band():
    assert clamped_asin(0.5) == pytest.approx(math.asin(0.5))
    with pytest.warns(DomainClampWarning):
        assert clamped_asin(1.0 + 5e-10) == pytest.approx(HALF_PI)
    with pytest.raises(DomainError):
        clamped_asin(1.0 + 1e-6)


# --------------------------------------------------------------------------- embedding

@given(angles, angles, radii)
def test_embedding_norm_is_radius(u, v, R):
    x = sphere_embed(SpherePoint(u, v), R)
    assert np.linalg.norm(x) == pytest.approx(R, rel=1e-12)


def test_embedding_examples():
    np.testing.assert_allclose(sphere_embed(SpherePoint(0, 0), 0.5), [0, 0, -0.5], atol=1e-15)
    np.testing.assert_allclose(sphere_embed(SpherePoint(HALF_PI, 0), 0.5), [-0.5, 0, 0], atol=1e-15)
    np.testing.assert_allclose(sphere_embed(SpherePoint(0, HALF_PI), 0.5), [0, 0.5, 0], atol=1e-15)
    with pytest.raises(ValueError):
        sphere_embed(SpherePoint(0, 0), 0.0)


def test_embed_uv_matches_scalar_embedding():
    rng = np.random.default_rng(1)
    u, v = rng.uniform(-PI, PI, (2, 50))
    ref = np.array([sphere_embed(SpherePoint(a, b), 0.7) for a, b in zip(u, v)])
    np.testing.assert_allclose(embed_uv(u, v, 0.7), ref, atol=1e-15)


# --------------------------------------------------------------------------- curvatures

@given(angles, st.floats(-1.5, 1.5), radii)
def test_sphere_curvatures_match_latitude_circle(u, v, R):
    cu, cv = sphere_curvatures(SpherePoint(u, v), R)
    # geodesic and normal curvature split the total curvature of the latitude circle
    assert cu.k_g ** 2 + cu.k_n ** 2 == pytest.approx(latitude_total_curvature(v, R) ** 2, rel=1e-9)
    assert math.copysign(1.0, cu.k_g) == math.copysign(1.0, math.tan(v)) or cu.k_g == 0.0
    assert cu.k_n == pytest.approx(1 / R) and cv.k_n == pytest.approx(1 / R)
    assert cu.tau_g == 0.0 and cv.tau_g == 0.0 and cv.k_g == 0.0


def test_sphere_curvature_pole_raises():
    with pytest.raises(PoleError):
        sphere_curvatures(SpherePoint(0.3, HALF_PI), 0.5)


def test_plane_is_flat():
    for t in plane_curvatures():
        assert (t.k_g, t.k_n, t.tau_g) == (0.0, 0.0, 0.0)


@given(st.floats(-PI, PI), st.floats(0.05, 3), st.floats(0.0, 3))
def test_helicoid_torsion_forms(v, Rv, Rt):
    c2 = (Rv * math.cos(v)) ** 2
    tau = helicoid_torsion(v, Rv, Rt)
    assert tau == pytest.approx(math.sqrt(abs(c2 - Rt * Rt)) / Rv ** 2, rel=1e-12, abs=1e-15)
    ref = helicoid_curvatures_reference(v, Rv, Rt)
    assert ref.tau_g >= tau - 1e-12
    if Rt == 0.0:
        assert ref.tau_g == pytest.approx(tau, rel=1e-12, abs=1e-15)


def test_helicoid_chart_shear():
    base = helicoid_embed(0.4, 0.3, 1.0, 0.0)
    sheared = helicoid_embed(0.4, 0.3, 1.0, 2.0)
    np.testing.assert_allclose(sheared - base, [0, 0.8, 0], atol=1e-15)
    np.testing.assert_allclose(base, sphere_embed(SpherePoint(0.4, 0.3), 1.0), atol=1e-15)


# --------------------------------------------------------------------------- rotation

def test_rotation_matches_matrix_oracle_on_1000_samples():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        u, v, G = rng.uniform(-PI, PI, 3)
        p = SpherePoint(u, v)
        q = rotate_to_goal_frame(p, G)
        expect = rotation_z(G - PI / 4) @ sphere_embed(p, 1.0)
        worst = max(worst, float(np.linalg.norm(sphere_embed(q, 1.0) - expect)))
    assert worst <= 1e-9


@given(angles, angles, angles)
def test_rotation_preserves_norm_and_chords(u, v, G):
    p = SpherePoint(u, v)
    q = rotate_to_goal_frame(p, G)
    assert np.linalg.norm(sphere_embed(q, 0.5)) == pytest.approx(0.5, rel=1e-12)
    o = SpherePoint(0.1, -0.2)
    assert chord_error(q, rotate_to_goal_frame(o, G), 0.5) == pytest.approx(chord_error(p, o, 0.5), abs=1e-9)


def test_rotation_identity_at_quarter_pi():
    p = SpherePoint(0.4, -0.3)
    q = rotate_to_goal_frame(p, PI / 4)
    assert q.u_o == pytest.approx(p.u_o, abs=1e-12) and q.v_o == pytest.approx(p.v_o, abs=1e-12)


def test_zx_zy_angles():
    assert zx_zy_angles(SpherePoint(0.7, 0.0)) == pytest.approx((0.7, HALF_PI))
    assert zx_zy_angles(SpherePoint(0.0, 0.5)) == pytest.approx((0.0, 0.0))


# --------------------------------------------------------------------------- chord distance

@given(angles, angles, angles, angles, radii)
def test_chord_matches_embedding_distance(u1, v1, u2, v2, R):
    a, b = SpherePoint(u1, v1), SpherePoint(u2, v2)
    ref = float(np.linalg.norm(sphere_embed(a, R) - sphere_embed(b, R)))
    assert abs(chord_error(a, b, R) - ref) <= 1e-12
    assert chord_error(a, b, R) == pytest.approx(chord_error(b, a, R), abs=1e-15)


def test_chord_errors_vectorized():
    rng = np.random.default_rng(3)
    u, v = rng.uniform(-PI, PI, (2, 40))
    t = SpherePoint(0.2, 0.9)
    np.testing.assert_allclose(chord_errors(u, v, t, 0.5),
                               [chord_error(SpherePoint(a, b), t, 0.5) for a, b in zip(u, v)], atol=1e-15)


def test_chord_of_antipodes_is_diameter():
    assert chord_error(SpherePoint(0, 0), SpherePoint(PI, 0), 0.5) == pytest.approx(1.0)


# --------------------------------------------------------------------------- Gauss-Bonnet

@pytest.mark.parametrize("colat", [0.2, 0.8, 1.5, 2.4])
def test_spin_change_matches_parallel_transport(colat):
    R = 0.5
    area = cap_area_quadrature(colat, R)
    spin = cap_spin_change(area, R)
    hol = latitude_holonomy(colat)
    diff = (spin - hol + PI) % (2 * PI) - PI
    assert abs(diff) <= 1e-3


def test_cap_area_quadrature_matches_closed_form():
    R, colat = 0.5, 1.1
    assert cap_area_quadrature(colat, R) == pytest.approx(2 * PI * R * R * (1 - math.cos(colat)), abs=1e-6)


def test_spin_change_rejects_bad_radius():
    with pytest.raises(ValueError):
        cap_spin_change(1.0, 0.0)
