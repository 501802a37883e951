"""Short-horizon path prediction and the forward-motion collision gate."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Iterable, Sequence

import numpy as np

from . import config
from .kinematics import arc_step


class CommandSource(IntEnum):
    CONSOLE = 1
    SCRIPT = 2
    SAFETY = 3


class SafetyState(IntEnum):
    CLEAR = 0
    WARNING = 1
    BLOCKED = 2
    STALE_COMMAND = 3


@dataclass(frozen=True)
class TwistCommand:
    v: float
    omega: float
    stamp_ns: int = 0
    source: CommandSource = CommandSource.CONSOLE


@dataclass(frozen=True)
class SafetyStatus:
    state: SafetyState
    nearest_obstacle_id: int | None
    clearance: float    # min over the horizon, floored at 0
    horizon: float


@dataclass(frozen=True)
class SafetyParams:
    r_rover: float = config.ROVER_RADIUS_M
    margin: float = config.SAFETY_MARGIN_M
    warn_clearance: float = config.SAFETY_WARN_CLEARANCE_M
    horizon: float = config.SAFETY_HORIZON_S
    step: float = config.SAFETY_STEP_S


def predict_path(est, cmd: TwistCommand, horizon: float = config.SAFETY_HORIZON_S,
                 step: float = config.SAFETY_STEP_S) -> np.ndarray:
    """Constant-twist pose samples (x, y, theta) at t = step, 2*step, ..., horizon.

    `est` is anything with x, y, theta attributes. Uses the same arc formulas
    as the simulator's stepper, noise-free.
    """
    if horizon <= 0 or step <= 0:
        raise ValueError("horizon and step must be positive")
    n = int(math.floor(horizon / step + 1e-9))
    out = np.empty((n, 3))
    x, y, theta = est.x, est.y, est.theta
    for i in range(n):
        x, y, theta = arc_step(x, y, theta, cmd.v, cmd.omega, step)
        out[i] = (x, y, theta)
    return out


def path_clearance(samples: np.ndarray, landmarks: Sequence,
                   r_rover: float) -> tuple[float, int | None]:
    """Min horizontal clearance over the path and the landmark achieving it.

    Landmarks need position (3-vector) and radius attributes. Returns the
    sentinel clearance when no landmarks are given.
    """
    if len(landmarks) == 0:
        return config.CLEARANCE_SENTINEL_M, None
    best = math.inf
    best_id = None
    for lm in landmarks:
        lx, ly = float(lm.position[0]), float(lm.position[1])
        d = np.hypot(samples[:, 0] - lx, samples[:, 1] - ly)
        c = float(np.min(d)) - lm.radius - r_rover
        if c < best:
            best = c
            best_id = lm.id
    return best, best_id


def safety_gate(cmd: TwistCommand, landmarks: Sequence, est,
                params: SafetyParams = SafetyParams(),
                ) -> tuple[TwistCommand, SafetyStatus]:
    """Gate forward motion against confirmed landmarks.

    Blocks (v forced to 0, omega preserved) when the predicted path comes
    within `margin` of any landmark. Reverse and pure-rotation commands are
    never blocked.
    """
    samples = predict_path(est, cmd, params.horizon, params.step)
    clearance, nearest = path_clearance(samples, landmarks, params.r_rover)
    if clearance < params.margin and cmd.v > 0:
        gated = replace(cmd, v=0.0, source=CommandSource.SAFETY)
        state = SafetyState.BLOCKED
    elif clearance < params.warn_clearance:
        gated = cmd
        state = SafetyState.WARNING
    else:
        gated = cmd
        state = SafetyState.CLEAR
    status = SafetyStatus(state=state, nearest_obstacle_id=nearest,
                          clearance=max(0.0, clearance), horizon=params.horizon)
    return gated, status


def watchdog(last_cmd_stamp_ns: int, now_ns: int,
             timeout_ms: int = config.WATCHDOG_TIMEOUT_MS,
             ) -> tuple[TwistCommand, SafetyStatus] | None:
    """Stop command + stale status when the command link has gone quiet."""
    if timeout_ms <= 0:
        raise ValueError("timeout must be positive")
    if now_ns - last_cmd_stamp_ns > timeout_ms * 1_000_000:
        stop = TwistCommand(0.0, 0.0, stamp_ns=now_ns, source=CommandSource.SAFETY)
        status = SafetyStatus(state=SafetyState.STALE_COMMAND, nearest_obstacle_id=None,
                              clearance=config.CLEARANCE_SENTINEL_M,
                              horizon=config.SAFETY_HORIZON_S)
        return stop, status
    return None
