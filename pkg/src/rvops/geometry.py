"""Rigid transforms and the pinhole camera model shared by all modules.

Quaternions are (w, x, y, z) and re-normalized after every constructor and
composition so unit norm holds to 1e-9. World frame is z-up; the camera
optical frame is z-forward, x-right, y-down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import config

Vec3 = np.ndarray


@dataclass(frozen=True)
class Quat:
    """Unit quaternion in (w, x, y, z) order."""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        n = math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)
        if n < 1e-12:
            raise ValueError("degenerate quaternion (near-zero norm)")
        # Skip division when already unit so decoded values stay bit-exact.
        if abs(n - 1.0) > 1e-12:
            object.__setattr__(self, "w", self.w / n)
            object.__setattr__(self, "x", self.x / n)
            object.__setattr__(self, "y", self.y / n)
            object.__setattr__(self, "z", self.z / n)

    @staticmethod
    def identity() -> "Quat":
        return Quat(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_axis_angle(axis, angle: float) -> "Quat":
        a = np.asarray(axis, dtype=np.float64)
        n = float(np.linalg.norm(a))
        if n < 1e-12:
            raise ValueError("rotation axis must be nonzero")
        a = a / n
        half = 0.5 * angle
        s = math.sin(half)
        return Quat(math.cos(half), a[0] * s, a[1] * s, a[2] * s)

    @staticmethod
    def from_yaw(yaw: float) -> "Quat":
        """Rotation about world +z."""
        return Quat(math.cos(0.5 * yaw), 0.0, 0.0, math.sin(0.5 * yaw))

    @staticmethod
    def from_matrix(rot: np.ndarray) -> "Quat":
        """Shepperd's method; input must be a proper rotation matrix."""
        m = np.asarray(rot, dtype=np.float64)
        t = m[0, 0] + m[1, 1] + m[2, 2]
        if t > 0.0:
            s = math.sqrt(t + 1.0) * 2.0
            return Quat(0.25 * s, (m[2, 1] - m[1, 2]) / s,
                        (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s)
        if m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
            s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
            return Quat((m[2, 1] - m[1, 2]) / s, 0.25 * s,
                        (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s)
        if m[1, 1] > m[2, 2]:
            s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
            return Quat((m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s,
                        0.25 * s, (m[1, 2] + m[2, 1]) / s)
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        return Quat((m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s,
                    (m[1, 2] + m[2, 1]) / s, 0.25 * s)

    def conjugate(self) -> "Quat":
        return Quat(self.w, -self.x, -self.y, -self.z)


def quat_multiply(a: Quat, b: Quat) -> Quat:
    """Hamilton product a*b, re-normalized."""
    return Quat(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )


def quat_rotate(q: Quat, v) -> Vec3:
    """Rotate vector v by q (returns q v q*)."""
    vv = np.asarray(v, dtype=np.float64)
    qv = np.array([q.x, q.y, q.z])
    t = 2.0 * np.cross(qv, vv)
    return vv + q.w * t + np.cross(qv, t)


def rotation_matrix(q: Quat) -> np.ndarray:
    """3x3 rotation matrix of q."""
    w, x, y, z = q.w, q.x, q.y, q.z
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


@dataclass(eq=False)
class Pose:
    """Rigid transform: p_out = R(rotation) @ p + translation (meters)."""

    rotation: Quat
    translation: np.ndarray

    def __post_init__(self) -> None:
        self.translation = np.array(self.translation, dtype=np.float64).reshape(3)

    @staticmethod
    def identity() -> "Pose":
        return Pose(Quat.identity(), np.zeros(3))

    @staticmethod
    def from_xytheta(x: float, y: float, theta: float, z: float = 0.0) -> "Pose":
        return Pose(Quat.from_yaw(theta), np.array([x, y, z]))


def pose_compose(a: Pose, b: Pose) -> Pose:
    """a then b applied innermost: (a.b)(p) = a(b(p))."""
    return Pose(quat_multiply(a.rotation, b.rotation),
                quat_rotate(a.rotation, b.translation) + a.translation)


def pose_inverse(a: Pose) -> Pose:
    qi = a.rotation.conjugate()
    return Pose(qi, -quat_rotate(qi, a.translation))


def transform_point(a: Pose, p) -> Vec3:
    return quat_rotate(a.rotation, p) + a.translation


def transform_points(a: Pose, pts: np.ndarray) -> np.ndarray:
    """Batch transform of (N, 3) points."""
    rot = rotation_matrix(a.rotation)
    return np.asarray(pts, dtype=np.float64) @ rot.T + a.translation


def yaw_of(q: Quat) -> float:
    """Heading about world +z encoded in q."""
    return math.atan2(2.0 * (q.w * q.z + q.x * q.y),
                      1.0 - 2.0 * (q.y * q.y + q.z * q.z))


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole model; depth_scale converts stored depth units to meters."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    depth_scale: float

    def __post_init__(self) -> None:
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point out of image bounds")
        if self.depth_scale <= 0:
            raise ValueError("depth_scale must be positive")


def default_intrinsics() -> CameraIntrinsics:
    return CameraIntrinsics(
        fx=config.CAMERA_FX, fy=config.CAMERA_FY,
        cx=config.CAMERA_CX, cy=config.CAMERA_CY,
        width=config.CAMERA_WIDTH, height=config.CAMERA_HEIGHT,
        depth_scale=config.DEPTH_SCALE_M,
    )


def project(k: CameraIntrinsics, p_cam) -> tuple[float, float] | None:
    """Pixel of a camera-frame point, or None when at/behind the camera.

    The result may lie outside image bounds; callers clip.
    """
    p = np.asarray(p_cam, dtype=np.float64)
    z = float(p[2])
    if z <= config.TOL.behind_camera_z:
        return None
    return (k.fx * float(p[0]) / z + k.cx, k.fy * float(p[1]) / z + k.cy)


def back_project(k: CameraIntrinsics, u: float, v: float, z: float) -> Vec3:
    """Camera-frame point of pixel (u, v) at depth z > 0 meters."""
    if z <= 0:
        raise ValueError("depth must be positive")
    return np.array([(u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z])


def body_to_camera(height: float = config.CAMERA_HEIGHT_ABOVE_BODY_M,
                   pitch_down: float = config.CAMERA_PITCH_DOWN_RAD) -> Pose:
    """Mount extrinsic: camera `height` above the body origin, pitched down.

    Maps camera-frame points into the body frame (x-forward, y-left, z-up).
    """
    # Columns: camera x (right), y (down), z (forward) expressed in body axes.
    base = np.array([
        [0.0, 0.0, 1.0],
        [-1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0],
    ])
    pitch = rotation_matrix(Quat.from_axis_angle([0.0, 1.0, 0.0], pitch_down))
    return Pose(Quat.from_matrix(pitch @ base), np.array([0.0, 0.0, height]))
