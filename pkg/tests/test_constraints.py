import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from excavtraj.constraints import (
    ConstraintSpec,
    DegenerateGeometryError,
    cone_normals,
    direction_halfplane_residual,
    evaluate_all,
    heading_direction,
    limit_residuals,
    monotonic_direction_residuals,
    quadrilateral_area,
    swept_volume,
    translation_direction,
)
from excavtraj.kinematics import BucketGeometry, ExcavatorModel, inverse_kinematics, rot2
from excavtraj.seed import TaskSpec, seed_trajectory
from excavtraj.soil import SoilParams, TerrainProfile
from excavtraj.trajectory import KeypointTrajectory, interpolate
from conftest import SOFT
from oracles import default_model, triangle_fan_area

MODEL = default_model()
FLAT = TerrainProfile.flat()
SPEC = ConstraintSpec()
LABELS = ("entry", "penetration_end", "drag_end", "exit", "lift_end")


def tip_trajectory(points, rotations, labels=LABELS):
    k = [inverse_kinematics(MODEL, np.asarray(p, dtype=float), r) for p, r in zip(points, rotations)]
    return KeypointTrajectory(keypoints=k, intervals=[1.0] * (len(k) - 1), labels=labels)


def test_rectangle_volume():
    assert quadrilateral_area([0, 0], [0, -1], [2, -1], [2, 0]) * 1.0 == 2.0
    tr = tip_trajectory([(6, 0), (6, -1), (4, -1), (4, 0), (4, 1)], [-1.0] * 5)
    assert swept_volume(tr, MODEL) == pytest.approx(2.0, abs=1e-12)


def test_collinear_volume_is_zero():
    assert quadrilateral_area([0, 0], [1, 1], [2, 2], [3, 3]) == 0.0


@st.composite
def convex_quads(draw):
    c = draw(arrays(float, 2, elements=st.floats(-5, 5)))
    angles = np.sort(draw(arrays(float, 4, elements=st.floats(0, 2 * np.pi), unique=True)))
    radii = draw(arrays(float, 4, elements=st.floats(0.5, 3.0)))
    gaps = np.diff(np.concatenate([angles, [angles[0] + 2 * np.pi]]))
    from hypothesis import assume

    assume(gaps.min() > 0.1 and gaps.max() < np.pi - 0.1)
    r = radii.min()
    return c + r * np.stack([np.cos(angles), np.sin(angles)], -1)


@given(convex_quads())
def test_area_matches_triangulation(pts):
    assert quadrilateral_area(*pts) == pytest.approx(triangle_fan_area(pts), rel=1e-12, abs=1e-12)


@given(convex_quads(), arrays(float, 2, elements=st.floats(-100, 100)))
def test_area_translation_invariant(pts, shift):
    assert quadrilateral_area(*(pts + shift)) == pytest.approx(quadrilateral_area(*pts), rel=1e-9, abs=1e-9)


def test_self_intersecting_quadrilateral_rejected():
    with pytest.raises(DegenerateGeometryError):
        quadrilateral_area([0, 0], [1, 1], [1, 0], [0, 1])


def test_volume_scales_with_width():
    wide = ExcavatorModel(**{**MODEL.__dict__, "bucket": BucketGeometry(width=2.5)})
    tr = seed_trajectory(SPEC, MODEL, FLAT, TaskSpec(target_depth=0.45))
    assert swept_volume(tr, wide) == pytest.approx(2.5 * swept_volume(tr, MODEL), rel=1e-12)


def test_halfplane_examples():
    assert direction_halfplane_residual([0, -1], [0, 1]) == -1
    assert direction_halfplane_residual([1, 0], [0, 1]) == 0
    n = np.array([0.6, 0.8])
    assert direction_halfplane_residual(n, n) == pytest.approx(1.0)


@given(arrays(float, 2, elements=st.floats(-10, 10)), st.floats(-np.pi, np.pi), st.floats(1e-3, 1e3))
def test_halfplane_sign_is_scale_invariant(v, a, s):
    n = np.array([np.cos(a), np.sin(a)])
    assert np.sign(direction_halfplane_residual(s * v, n)) == np.sign(direction_halfplane_residual(v, n))


@given(st.floats(0.05, 1.5))
def test_cone_normals_bound_the_cone(alpha):
    axis = np.array([0.0, 1.0])
    n1, n2 = cone_normals(axis, alpha)
    assert np.linalg.norm(n1) == pytest.approx(1) and np.linalg.norm(n2) == pytest.approx(1)
    inside = rot2(0.9 * alpha) @ axis, rot2(-0.9 * alpha) @ axis
    outside = rot2(1.1 * alpha) @ axis, rot2(-1.1 * alpha) @ axis
    for v in inside:
        assert max(v @ n1, v @ n2) < 0
    for v in outside:
        assert max(v @ n1, v @ n2) > 0


def test_heading_identity_and_quarter_turn():
    m = ExcavatorModel(**{**MODEL.__dict__, "bucket": BucketGeometry(tooth_direction=[1.0, 0.0])})
    np.testing.assert_allclose(heading_direction(np.zeros(4), m), [1.0, 0.0])
    np.testing.assert_allclose(heading_direction([0, np.pi / 2, 0, 0], m), [0.0, 1.0], atol=1e-15)


@given(arrays(float, 4, elements=st.floats(-10, 10)))
def test_heading_is_unit(q):
    assert np.linalg.norm(heading_direction(q, MODEL)) == pytest.approx(1.0, abs=1e-14)


def test_translation_examples():
    np.testing.assert_array_equal(translation_direction([0, 0], [1, -1]), [1, -1])
    with pytest.raises(DegenerateGeometryError):
        translation_direction([2.0, 3.0], [2.0, 3.0])
    a, b, c = np.array([0.0, 0.0]), np.array([1.0, -2.0]), np.array([3.0, 0.5])
    np.testing.assert_allclose(translation_direction(a, c), translation_direction(a, b) + translation_direction(b, c))


def arc_trajectory(rotations):
    """Tip moves clockwise around a point while the bucket turns by ``rotations``."""
    angles = np.linspace(np.pi, np.pi / 2, len(rotations))
    pts = [(5.0 + 0.8 * np.cos(a), -0.3 + 0.8 * np.sin(a) - 0.8) for a in angles]
    labels = ("entry", "penetration_end", "drag_end", "rotation_mid", "exit", "lift_end")[: len(rotations)]
    return tip_trajectory(pts, rotations, labels)


def test_clockwise_headings_are_monotone():
    h, t = monotonic_direction_residuals(arc_trajectory([-0.5, -0.9, -1.3, -1.7, -2.1]), MODEL)
    assert np.all(h < 0)
    assert h.shape == (4,) and t.shape == (3,)


def test_heading_swinging_back_is_flagged():
    h, _ = monotonic_direction_residuals(arc_trajectory([-0.5, -0.9, -0.6, -1.7, -2.1]), MODEL)
    assert h[1] > 0 and h[0] < 0


def test_constant_heading_is_boundary():
    h, _ = monotonic_direction_residuals(arc_trajectory([-1.0] * 5), MODEL)
    np.testing.assert_allclose(h, 0.0, atol=1e-15)


@given(st.floats(-np.pi, np.pi))
def test_monotone_residuals_invariant_under_common_rotation(a):
    base = arc_trajectory([-0.5, -0.9, -0.6, -1.7, -2.1])
    turned = base.replace(keypoints=base.keypoints + [0.0, a, 0.0, 0.0])
    h0, t0 = monotonic_direction_residuals(base, MODEL)
    h1, t1 = monotonic_direction_residuals(turned, MODEL)
    np.testing.assert_allclose(h1, h0, atol=1e-12)
    np.testing.assert_allclose(t1, t0, atol=1e-9)


def test_limit_residual_examples():
    k = np.tile([0.0, 0.5, -1.0, -0.5], (5, 1))
    d = interpolate(KeypointTrajectory(keypoints=k, intervals=[1.0] * 4, labels=LABELS))
    vel, tau = limit_residuals(d, np.zeros((d.n_waypoints, 4)), MODEL)
    np.testing.assert_allclose(vel, -(0.785**2))
    np.testing.assert_allclose(tau, np.broadcast_to(-MODEL.joint_torque_limits[1:] ** 2, tau.shape))

    torques = np.zeros((d.n_waypoints, 4))
    torques[:, 1] = 950000.0
    _, tau = limit_residuals(d, torques, MODEL)
    assert np.all(tau[:, 0] == 0.0)

    k = np.zeros((5, 4))
    k[:, 2] = np.arange(5) * 2 * 0.785
    d = interpolate(KeypointTrajectory(keypoints=k, intervals=[1.0] * 4, labels=LABELS))
    vel, _ = limit_residuals(d, np.zeros((d.n_waypoints, 4)), MODEL)
    np.testing.assert_allclose(vel[:, 1], 3 * 0.785**2)


def test_shallow_seed_violates_volume():
    tr = seed_trajectory(SPEC, MODEL, FLAT, TaskSpec(target_depth=0.35))
    rep = evaluate_all(tr, SPEC, MODEL, FLAT, SOFT)
    assert rep["SweptVolumeCstr"] > 0
    assert rep.max_violation() == pytest.approx(rep["SweptVolumeCstr"])


def test_constructed_feasible_trajectory_satisfies_everything():
    tr = seed_trajectory(SPEC, MODEL, FLAT, TaskSpec(target_depth=0.45))
    rep = evaluate_all(tr, SPEC, MODEL, FLAT, SOFT)
    assert np.all(rep.violations(scaled=False) <= 1e-6)
    assert rep.info["swept_volume_m3"] == pytest.approx(0.9)


def test_report_structure():
    tr = seed_trajectory(SPEC, MODEL, FLAT, TaskSpec(target_depth=0.45))
    rep = evaluate_all(tr, SPEC, MODEL, FLAT, SOFT)
    assert len(set(rep.names)) == len(rep.names)
    assert np.all(np.isfinite(rep.values))
    n = len(tr.labels)
    for name in ("SweptVolumeCstr", "SweptVolumeMaxCstr", "EHDirCstr[0]", "PTDirCstr", f"LHDirCstr[{n - 1},0]",
                 "TDirMonoCstrPDR[0]", "TDirMonoCstrL[4]", "HDirMonoCstr[5]", "IntervalCstr[5]",
                 "DepthCstr[drag_end,max]", "JointTorqueCstr[5,bucket]"):
        assert name in rep.names
    assert sum(name.startswith("HDirMonoCstr") for name in rep.names) == n - 1
    assert sum(name.startswith("TDirMonoCstr") for name in rep.names) == n - 2
    assert rep.residuals["SweptVolumeCstr"] == rep["SweptVolumeCstr"]
    assert set(rep.names[i] for i in np.flatnonzero(rep.equality)) == {"EntrySurfaceCstr", "ExitSurfaceCstr"}


def test_soil_does_not_change_geometric_residuals():
    tr = seed_trajectory(SPEC, MODEL, FLAT, TaskSpec(target_depth=0.45))
    a = evaluate_all(tr, SPEC, MODEL, FLAT, SOFT)
    b = evaluate_all(tr, SPEC, MODEL, FLAT, SoilParams(rho=1000.0, k_p=0.0, k_v=0.0, k_s=0.0))
    for i, name in enumerate(a.names):
        if "Torque" not in name:
            assert a.values[i] == b.values[i], name


def test_boundary_velocity_pins_are_equalities():
    spec = ConstraintSpec(boundary_velocity_pins=True)
    tr = seed_trajectory(spec, MODEL, FLAT, TaskSpec(target_depth=0.45))
    rep = evaluate_all(tr, spec, MODEL, FLAT, SOFT)
    pins = [i for i, nm in enumerate(rep.names) if nm.startswith("BoundaryVelCstr")]
    assert len(pins) == 6 and rep.equality[pins].all()


def test_limits_override():
    spec = ConstraintSpec(velocity_limits=(1, 2, 3, 4))
    v, t = spec.limits(MODEL)
    assert v.tolist() == [1, 2, 3, 4] and t.tolist() == MODEL.joint_torque_limits.tolist()


@pytest.mark.parametrize(
    "kw",
    [
        {"volume_min": 1.2, "volume_max": 1.0},
        {"volume_min": 0.0},
        {"depth_window": (1.0, 0.5)},
        {"rotation_sign": 0},
        {"min_interval": 0.0},
        {"entry_cone_half_angle": 2.0},
    ],
)
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        ConstraintSpec(**kw)
