"""Central constants: frame conventions, tolerances, and default parameters.

Frames: world is z-up, meters. Rover body is x-forward, y-left, z-up.
Camera optical frame is z-forward, x-right, y-down. Angles are radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    """Numeric tolerances shared across modules."""

    unit_norm: float = 1e-9          # quaternion / normal vector norm check
    behind_camera_z: float = 1e-6    # projection rejects z at or below this
    collinear_cross: float = 1e-9    # RANSAC sample rejection
    straight_omega: float = 1e-6     # twist integration straight-line branch


TOL = Tolerances()

# Default synthetic camera: wide-FOV RGBD at reduced resolution,
# millimeter depth units.
CAMERA_WIDTH = 320
CAMERA_HEIGHT = 240
CAMERA_FX = 277.0
CAMERA_FY = 277.0
CAMERA_CX = 160.0
CAMERA_CY = 120.0
DEPTH_SCALE_M = 0.001

# Camera mount: 0.5 m above the body origin, pitched down 20 deg.
CAMERA_HEIGHT_ABOVE_BODY_M = 0.5
CAMERA_PITCH_DOWN_RAD = math.radians(20.0)

# Drive limits and command sources.
V_MAX = 0.5          # m/s
OMEGA_MAX = 1.0      # rad/s

# Simulation timing: 20 Hz dynamics, RGBD frames every 4 ticks (5 Hz).
SIM_TICK_S = 0.05
SIM_TICK_NS = 50_000_000
FRAME_EVERY_TICKS = 4

# Depth rendering.
DEPTH_SIGMA_M = 0.005
DEPTH_MAX_RANGE_M = 10.0
DEPTH_MARCH_STEP_M = 0.01
DEPTH_BISECT_ITERS = 20
TERRAIN_ALBEDO = 0.8
ROCK_ALBEDO = 0.45

# Odometry noise (per measurement).
ODOM_SIGMA_V = 0.01      # m/s
ODOM_SIGMA_OMEGA = 0.01  # rad/s

# Rover collision body (disc).
ROVER_RADIUS_M = 0.25

# Safety gate defaults.
SAFETY_MARGIN_M = 0.10
SAFETY_WARN_CLEARANCE_M = 0.30
SAFETY_HORIZON_S = 1.0
SAFETY_STEP_S = 0.1
WATCHDOG_TIMEOUT_MS = 500
CLEARANCE_SENTINEL_M = 999.0

# Network endpoints (overridable by CLI flags / env vars).
DEFAULT_ROVER_PORT = 7401
DEFAULT_WS_PORT = 7402
ENV_ROVER_PORT = "RVOPS_ROVER_PORT"
ENV_WS_PORT = "RVOPS_WS_PORT"

# Stream tags used to derive independent counter-based RNG keys from one seed.
STREAM_DEPTH_NOISE = 1
STREAM_ODOMETRY = 2
STREAM_RANSAC = 3
STREAM_SCENE = 4
