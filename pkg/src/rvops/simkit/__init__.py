"""Deterministic rover + terrain simulator: scene, dynamics, RGBD rendering."""

from .frames import DepthFrame, RgbFrame
from .render import (camera_pose_for_state, raycast, render_depth, render_rgb,
                     render_rgbd)
from .rover import (OdometryTracker, OdomNoise, RoverState, TwistLimits,
                    check_collision, step_rover)
from .scene import (Rock, Scene, SceneParams, ScenePlacementError,
                    generate_scene, load_scene, rock_center_z, save_scene,
                    scene_from_dict, scene_to_dict, terrain_height)

__all__ = [
    "DepthFrame", "RgbFrame",
    "camera_pose_for_state", "raycast", "render_depth", "render_rgb", "render_rgbd",
    "OdometryTracker", "OdomNoise", "RoverState", "TwistLimits",
    "check_collision", "step_rover",
    "Rock", "Scene", "SceneParams", "ScenePlacementError",
    "generate_scene", "load_scene", "rock_center_z", "save_scene",
    "scene_from_dict", "scene_to_dict", "terrain_height",
]
