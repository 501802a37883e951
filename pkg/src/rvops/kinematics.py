"""Constant-twist arc integration shared by the simulator and the safety gate."""

from __future__ import annotations

import math

from . import config


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    r = math.remainder(a, math.tau)
    return math.pi if r <= -math.pi else r


def arc_step(x: float, y: float, theta: float, v: float, omega: float,
             dt: float) -> tuple[float, float, float]:
    """Advance a planar pose by a constant twist (v, omega) for dt seconds.

    Exact arc integration; falls back to the straight-line formula when
    |omega| is below the configured threshold.
    """
    if abs(omega) < config.TOL.straight_omega:
        return (x + v * math.cos(theta) * dt,
                y + v * math.sin(theta) * dt,
                wrap_angle(theta))
    theta1 = theta + omega * dt
    return (x + (v / omega) * (math.sin(theta1) - math.sin(theta)),
            y - (v / omega) * (math.cos(theta1) - math.cos(theta)),
            wrap_angle(theta1))
