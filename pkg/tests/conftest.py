"""Shared fixtures: canonical scenes and camera poses."""

from __future__ import annotations

import numpy as np
import pytest

from rvops import geometry as g
from rvops import simkit as sk


@pytest.fixture(scope="session")
def intrinsics() -> g.CameraIntrinsics:
    return g.default_intrinsics()


def make_flat_scene(rocks=(), seed: int = 1) -> sk.Scene:
    return sk.Scene(heights=np.zeros((41, 41)), origin=(-5.0, -5.0),
                    cell_size=0.25, rocks=list(rocks),
                    sun_direction=[0.0, 0.0, 1.0], seed=seed)


@pytest.fixture
def flat_scene() -> sk.Scene:
    return make_flat_scene()


@pytest.fixture
def single_rock_scene() -> sk.Scene:
    return make_flat_scene(rocks=[sk.Rock(2.0, 0.0, 0.2)], seed=3)


def down_camera(height: float) -> g.Pose:
    """Camera looking straight down: optical axis along world -z."""
    rot = np.array([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]])
    return g.Pose(g.Quat.from_matrix(rot), np.array([0.0, 0.0, height]))


@pytest.fixture
def rover_camera(single_rock_scene) -> g.Pose:
    """Mounted-camera pose for the rover parked at the origin."""
    return sk.camera_pose_for_state(single_rock_scene, sk.RoverState(),
                                    g.body_to_camera())
