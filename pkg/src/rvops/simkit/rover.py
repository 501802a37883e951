"""Differential-drive dynamics, odometry corruption, and collision truth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import config
from ..geometry import Pose
from ..kinematics import arc_step
from ..safety import TwistCommand
from .scene import Scene


@dataclass(frozen=True)
class TwistLimits:
    v_max: float = config.V_MAX
    omega_max: float = config.OMEGA_MAX


@dataclass(frozen=True)
class OdomNoise:
    sigma_v: float = config.ODOM_SIGMA_V
    sigma_omega: float = config.ODOM_SIGMA_OMEGA


@dataclass(frozen=True)
class RoverState:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0
    v: float = 0.0
    omega: float = 0.0


def step_rover(st: RoverState, cmd: TwistCommand, dt: float,
               noise: OdomNoise | None = None,
               rng: np.random.Generator | None = None,
               limits: TwistLimits = TwistLimits(),
               ) -> tuple[RoverState, tuple[float, float]]:
    """Advance the rover one tick along a constant-twist arc.

    Returns the new state plus the odometry measurement (v, omega) corrupted
    by zero-mean Gaussian noise. Commands are clamped to the limits.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    v = float(np.clip(cmd.v, -limits.v_max, limits.v_max))
    omega = float(np.clip(cmd.omega, -limits.omega_max, limits.omega_max))
    x, y, theta = arc_step(st.x, st.y, st.theta, v, omega, dt)
    if noise is not None and rng is not None and (noise.sigma_v > 0 or noise.sigma_omega > 0):
        meas = (v + noise.sigma_v * float(rng.standard_normal()),
                omega + noise.sigma_omega * float(rng.standard_normal()))
    else:
        meas = (v, omega)
    return RoverState(x, y, theta, v, omega), meas


def check_collision(scene: Scene, st: RoverState,
                    r_rover: float = config.ROVER_RADIUS_M) -> list[int]:
    """Indices of rocks whose horizontal clearance to the rover disc is negative."""
    if r_rover <= 0:
        raise ValueError("rover radius must be positive")
    hit = []
    for i, rock in enumerate(scene.rocks):
        if np.hypot(st.x - rock.x, st.y - rock.y) < r_rover + rock.radius:
            hit.append(i)
    return hit


@dataclass
class OdometryTracker:
    """Dead-reckoned planar pose from noisy (v, omega) measurements.

    Height is unknown to odometry and reported as zero.
    """

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def update(self, v_meas: float, omega_meas: float, dt: float) -> None:
        self.x, self.y, self.theta = arc_step(self.x, self.y, self.theta,
                                              v_meas, omega_meas, dt)

    def pose(self) -> Pose:
        return Pose.from_xytheta(self.x, self.y, self.theta)
