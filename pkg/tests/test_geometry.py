"""Rigid-transform and camera-model unit tests."""

import math

import numpy as np
import pytest

from rvops import geometry as g


def test_quat_identity_rotation():
    assert np.allclose(g.quat_rotate(g.Quat.identity(), [3, 4, 5]), [3, 4, 5])


def test_quat_90deg_about_z():
    q = g.Quat(w=math.sqrt(0.5), x=0.0, y=0.0, z=math.sqrt(0.5))
    assert np.allclose(g.quat_rotate(q, [1, 0, 0]), [0, 1, 0], atol=1e-12)


def test_quat_norm_preserved_random():
    rng = np.random.default_rng(42)
    for _ in range(500):
        q = g.Quat(*rng.normal(size=4))
        v = rng.uniform(-10, 10, size=3)
        assert abs(np.linalg.norm(g.quat_rotate(q, v)) - np.linalg.norm(v)) < 1e-9


def test_quat_constructor_normalizes():
    q = g.Quat(2.0, 0.0, 0.0, 0.0)
    assert q.w == 1.0
    with pytest.raises(ValueError):
        g.Quat(0.0, 0.0, 0.0, 0.0)


def test_quat_from_matrix_round_trip():
    rng = np.random.default_rng(7)
    for _ in range(200):
        q = g.Quat(*rng.normal(size=4))
        q2 = g.Quat.from_matrix(g.rotation_matrix(q))
        # q and -q encode the same rotation
        dot = abs(q.w * q2.w + q.x * q2.x + q.y * q2.y + q.z * q2.z)
        assert dot > 1 - 1e-12


def test_pose_compose_identity_unit():
    p = g.Pose.from_xytheta(1.5, -2.0, 0.7)
    for composed in (g.pose_compose(g.Pose.identity(), p),
                     g.pose_compose(p, g.Pose.identity())):
        assert np.allclose(composed.translation, p.translation)
        assert abs(composed.rotation.w - p.rotation.w) < 1e-12


def test_pose_compose_translations_add():
    a = g.Pose(g.Quat.identity(), [1, 0, 0])
    b = g.Pose(g.Quat.identity(), [0, 2, 0])
    assert np.allclose(g.pose_compose(a, b).translation, [1, 2, 0])


def test_pose_compose_matches_sequential_transform():
    rng = np.random.default_rng(11)
    for _ in range(300):
        a = g.Pose(g.Quat(*rng.normal(size=4)), rng.uniform(-5, 5, 3))
        b = g.Pose(g.Quat(*rng.normal(size=4)), rng.uniform(-5, 5, 3))
        p = rng.uniform(-5, 5, 3)
        lhs = g.transform_point(g.pose_compose(a, b), p)
        rhs = g.transform_point(a, g.transform_point(b, p))
        assert np.max(np.abs(lhs - rhs)) < 1e-9


def test_pose_compose_associative():
    rng = np.random.default_rng(12)
    for _ in range(100):
        a, b, c = (g.Pose(g.Quat(*rng.normal(size=4)), rng.uniform(-5, 5, 3))
                   for _ in range(3))
        p = rng.uniform(-5, 5, 3)
        lhs = g.transform_point(g.pose_compose(g.pose_compose(a, b), c), p)
        rhs = g.transform_point(g.pose_compose(a, g.pose_compose(b, c)), p)
        assert np.max(np.abs(lhs - rhs)) < 1e-9


def test_pose_inverse_trivial():
    inv = g.pose_inverse(g.Pose(g.Quat.identity(), [1, 2, 3]))
    assert np.allclose(inv.translation, [-1, -2, -3])
    ident = g.pose_inverse(g.Pose.identity())
    assert np.allclose(ident.translation, 0)


def test_pose_inverse_round_trip_random():
    rng = np.random.default_rng(13)
    for _ in range(300):
        a = g.Pose(g.Quat(*rng.normal(size=4)), rng.uniform(-5, 5, 3))
        ident = g.pose_compose(a, g.pose_inverse(a))
        q = ident.rotation
        angle = 2 * math.atan2(math.hypot(q.x, q.y, q.z), abs(q.w))
        assert angle < 1e-9
        assert np.linalg.norm(ident.translation) < 1e-9


def test_transform_point_hand_case():
    pose = g.Pose(g.Quat.from_yaw(math.pi / 2), [1, 0, 0])
    assert np.allclose(g.transform_point(pose, [1, 0, 0]), [1, 1, 0], atol=1e-12)
    assert np.allclose(g.transform_point(g.Pose.identity(), [1, 1, 1]), [1, 1, 1])


def test_transform_preserves_distances():
    rng = np.random.default_rng(14)
    a = g.Pose(g.Quat(*rng.normal(size=4)), rng.uniform(-5, 5, 3))
    p = rng.uniform(-5, 5, size=(50, 3))
    q = g.transform_points(a, p)
    for i in range(0, 48, 2):
        d0 = np.linalg.norm(p[i] - p[i + 1])
        d1 = np.linalg.norm(q[i] - q[i + 1])
        assert abs(d0 - d1) < 1e-9


def test_project_principal_point_and_offsets():
    k = g.CameraIntrinsics(fx=100, fy=100, cx=320, cy=240, width=640,
                           height=480, depth_scale=0.001)
    assert g.project(k, [0, 0, 2]) == (320.0, 240.0)
    assert g.project(k, [1, 0, 2]) == (370.0, 240.0)
    assert g.project(k, [0, 0, -1]) is None
    assert g.project(k, [0, 0, 0]) is None


def test_back_project_examples():
    k = g.CameraIntrinsics(fx=100, fy=100, cx=320, cy=240, width=640,
                           height=480, depth_scale=0.001)
    assert np.allclose(g.back_project(k, 320, 240, 2), [0, 0, 2])
    assert np.allclose(g.back_project(k, 370, 240, 2), [1, 0, 2])
    with pytest.raises(ValueError):
        g.back_project(k, 320, 240, 0.0)


def test_project_back_project_round_trip(intrinsics):
    rng = np.random.default_rng(15)
    for _ in range(500):
        u = rng.uniform(0, intrinsics.width)
        v = rng.uniform(0, intrinsics.height)
        z = rng.uniform(1e-3, 100.0)
        uv = g.project(intrinsics, g.back_project(intrinsics, u, v, z))
        assert uv is not None
        assert abs(uv[0] - u) < 1e-9 and abs(uv[1] - v) < 1e-9


def test_intrinsics_validation():
    with pytest.raises(ValueError):
        g.CameraIntrinsics(fx=0, fy=1, cx=0, cy=0, width=10, height=10,
                           depth_scale=0.001)
    with pytest.raises(ValueError):
        g.CameraIntrinsics(fx=1, fy=1, cx=20, cy=0, width=10, height=10,
                           depth_scale=0.001)
    with pytest.raises(ValueError):
        g.CameraIntrinsics(fx=1, fy=1, cx=0, cy=0, width=10, height=10,
                           depth_scale=0)


def test_body_to_camera_geometry():
    extr = g.body_to_camera()
    # camera sits 0.5 m above the body origin
    assert np.allclose(extr.translation, [0, 0, 0.5])
    # optical axis (camera +z) points forward and 20 deg down in body frame
    fwd = g.quat_rotate(extr.rotation, [0, 0, 1])
    assert np.allclose(fwd, [math.cos(math.radians(20)), 0,
                             -math.sin(math.radians(20))], atol=1e-12)
    # camera +x (image right) maps to body -y (right-hand side)
    right = g.quat_rotate(extr.rotation, [1, 0, 0])
    assert np.allclose(right, [0, -1, 0], atol=1e-12)


def test_yaw_of():
    for yaw in (-3.0, -1.0, 0.0, 0.5, 2.9):
        assert abs(g.yaw_of(g.Quat.from_yaw(yaw)) - yaw) < 1e-12
