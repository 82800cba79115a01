import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tangent_warp.geometry import (
    Curve,
    TangentProfile,
    curve_length,
    from_tangent,
    resample_uniform,
    segment_angles,
    segment_deviation,
    signed_segment_strain,
    tangent_points,
    to_tangent,
)


@st.composite
def smooth_profiles(draw, min_seg=1, max_seg=120, max_amp=400.0):
    n = draw(st.integers(min_seg, max_seg))
    s = np.linspace(0.0, 1.0, n)
    start = draw(st.floats(-180, 180))
    amps = [draw(st.floats(-max_amp, max_amp)) for _ in range(3)]
    phases = [draw(st.floats(0, 2 * math.pi)) for _ in range(3)]
    thetas = start + sum(a / (k + 1) * np.sin((k + 1) * math.pi * s + p)
                         for k, (a, p) in enumerate(zip(amps, phases)))
    base = [draw(st.floats(-5, 5)), draw(st.floats(-5, 5))]
    dl = draw(st.floats(1e-3, 1.0))
    return TangentProfile(thetas, base, dl)


# -- Curve -----------------------------------------------------------------

def test_curve_rejects_nonuniform():
    with pytest.raises(ValueError, match="resample_uniform"):
        Curve([[0, 0], [1, 0], [3, 0]], 1.0)


def test_curve_rejects_bad_delta_and_short():
    with pytest.raises(ValueError):
        Curve([[0, 0], [1, 0]], 0.0)
    with pytest.raises(ValueError):
        Curve([[0, 0]], 1.0)
    with pytest.raises(ValueError, match=r"nodes\[1\]"):
        Curve([[0, 0], [np.nan, 0]], 1.0)


def test_curve_nodes_read_only():
    c = Curve([[0, 0], [1, 0]], 1.0)
    with pytest.raises(ValueError):
        c.nodes[0, 0] = 5.0


def test_from_nodes_infers_spacing():
    c = Curve.from_nodes([[0, 0], [0, 2], [2, 2]])
    assert c.delta_l == 2.0
    assert c.nominal_length == 4.0


# -- resample_uniform -------------------------------------------------------

def test_resample_segment():
    c = resample_uniform([[0, 0], [1, 0]], 5)
    np.testing.assert_allclose(c.nodes[:, 0], [0, .25, .5, .75, 1], atol=1e-15)
    np.testing.assert_allclose(c.nodes[:, 1], 0, atol=0)
    assert c.delta_l == 0.25


def test_resample_idempotent_on_uniform_curve():
    c = from_tangent(TangentProfile(np.linspace(0, 200, 9), [0.3, -0.2], 0.1))
    r = resample_uniform(c.nodes, 10)
    assert np.max(np.abs(r.nodes - c.nodes)) < 1e-9
    assert abs(r.delta_l - c.delta_l) < 1e-12


def test_resample_quarter_circle_matches_arc_parameterization():
    t = np.linspace(0, math.pi / 2, 100)
    c = resample_uniform(np.column_stack([np.cos(t), np.sin(t)]), 20)
    # chords of 19 equal arcs of the unit circle are 2 sin(pi / 76)
    assert c.delta_l == pytest.approx((math.pi / 2) / 19, rel=1e-3)
    assert c.delta_l == pytest.approx(2 * math.sin(math.pi / 76), rel=1e-4)
    assert np.hypot(*(c.nodes[-1] - [0, 1])) < 1e-3
    # nodes stay on the arc: angle of node k is close to k * pi / 38
    ang = np.arctan2(c.nodes[:, 1], c.nodes[:, 0])
    np.testing.assert_allclose(ang, np.arange(20) * math.pi / 38, atol=1e-3)


def test_resample_l_shape_hits_corner():
    c = resample_uniform([[0, 0], [1, 0], [1, 1]], 5)
    np.testing.assert_allclose(c.nodes, [[0, 0], [.5, 0], [1, 0], [1, .5], [1, 1]], atol=1e-12)


def test_resample_length_preserved_on_straight_runs():
    poly = [[0, 0], [0.3, 0], [0.7, 0], [2.0, 0]]
    c = resample_uniform(poly, 7)
    assert curve_length(c) == pytest.approx(2.0, rel=1e-9)


def test_resample_errors():
    with pytest.raises(ValueError, match="zero total length"):
        resample_uniform([[1, 1], [1, 1], [1, 1]], 4)
    with pytest.raises(ValueError):
        resample_uniform([[0, 0], [1, 0]], 1)


@given(smooth_profiles(min_seg=3, max_seg=40, max_amp=150.0), st.integers(2, 60))
def test_resample_output_is_uniform(profile, n):
    raw = from_tangent(profile).nodes
    c = resample_uniform(raw, n)
    assert c.n_nodes == n
    assert segment_deviation(c, c.delta_l) < 1e-9
    np.testing.assert_allclose(c.nodes[0], raw[0])


# -- to_tangent / from_tangent ----------------------------------------------

def test_to_tangent_horizontal():
    c = Curve(np.column_stack([np.linspace(0, 1, 11), np.zeros(11)]), 0.1)
    p = to_tangent(c)
    assert len(p.thetas) == 10
    assert np.all(p.thetas == 0.0)
    np.testing.assert_array_equal(p.base_point, [0, 0])


def test_to_tangent_l_shape():
    c = Curve([[0, 0], [1, 0], [2, 0], [2, 1], [2, 2]], 1.0)
    np.testing.assert_allclose(to_tangent(c).thetas, [0, 0, 90, 90])


def test_to_tangent_full_circle_unwraps():
    n = 64
    phi = np.linspace(0, 2 * math.pi, n) - math.pi / 2
    pts = np.column_stack([np.cos(phi), np.sin(phi)])
    c = Curve.from_nodes(pts)
    th = to_tangent(c).thetas
    # analytic chord heading of a CCW circle: polar angle of the midpoint + 90
    mid = 0.5 * (phi[:-1] + phi[1:])
    expected = np.degrees(mid) + 90.0
    np.testing.assert_allclose(th, expected, atol=1e-9)
    assert np.all(np.abs(np.diff(th)) < 180)
    assert th[-1] - th[0] == pytest.approx(360.0 * (n - 2) / (n - 1))


def test_to_tangent_coincident_nodes_error():
    with pytest.raises(ValueError, match="coincide"):
        segment_angles([[0, 0], [1, 0], [1, 0]])


def test_tangent_points_layout():
    pts = tangent_points([5.0, 7.0, -3.0], 10.0)
    np.testing.assert_array_equal(pts, [[0, 5], [10, 7], [20, -3]])
    p = TangentProfile([1.0, 2.0], [0, 0], 1.0, abscissa_scale=2.5)
    np.testing.assert_array_equal(p.points[:, 0], [0, 2.5])


def test_from_tangent_straight():
    c = from_tangent(TangentProfile(np.zeros(10), [0, 0], 1.0))
    np.testing.assert_allclose(c.nodes[-1], [10, 0], atol=1e-12)


def test_from_tangent_l_shape():
    c = from_tangent(TangentProfile([0, 90], [0, 0], 1.0))
    np.testing.assert_allclose(c.nodes, [[0, 0], [1, 0], [1, 1]], atol=1e-15)


def test_profile_validation():
    with pytest.raises(ValueError):
        TangentProfile([], [0, 0], 1.0)
    with pytest.raises(ValueError):
        TangentProfile([0.0], [0, 0, 0], 1.0)
    with pytest.raises(ValueError):
        TangentProfile([0.0], [0, 0], -1.0)
    with pytest.raises(ValueError):
        TangentProfile([0.0], [0, 0], 1.0, abscissa_scale=0.0)


@given(smooth_profiles())
def test_round_trip(profile):
    c = from_tangent(profile)
    back = from_tangent(to_tangent(c))
    assert np.max(np.abs(back.nodes - c.nodes)) < 1e-9


@given(smooth_profiles())
def test_unwrapped_steps_below_half_turn(profile):
    th = to_tangent(from_tangent(profile)).thetas
    assert np.all(np.abs(np.diff(th)) < 180)


@given(smooth_profiles())
def test_integration_conserves_length(profile):
    c = from_tangent(profile)
    n = len(profile.thetas)
    assert abs(curve_length(c) - n * profile.delta_l) / (n * profile.delta_l) < 1e-12


# -- lengths and deviations -------------------------------------------------

def test_curve_length_examples():
    c = Curve(np.column_stack([np.arange(11.0), np.zeros(11)]), 1.0)
    assert curve_length(c) == 10.0
    c = from_tangent(TangentProfile(np.zeros(20), [0, 0], 0.05))
    assert curve_length(c) == pytest.approx(1.0, rel=1e-15)


def test_curve_length_raw_polyline():
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(15, 2))
    expected = sum(math.dist(pts[i], pts[i + 1]) for i in range(14))
    assert curve_length(pts) == pytest.approx(expected, rel=1e-14)


def test_segment_deviation_examples():
    c = from_tangent(TangentProfile(np.linspace(0, 90, 12), [0, 0], 0.2))
    assert segment_deviation(c, 0.2) < 1e-9
    pts = [[0, 0], [1, 0], [2.5, 0], [3.5, 0]]
    assert segment_deviation(pts, 1.0) == pytest.approx(0.5)
    np.testing.assert_allclose(signed_segment_strain([[0, 0], [0.9, 0], [2.0, 0]], 1.0),
                               [-0.1, 0.1])
    with pytest.raises(ValueError):
        segment_deviation(pts, 0.0)
