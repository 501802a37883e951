"""Path prediction, the forward-motion gate, and the command watchdog."""

import numpy as np
import pytest

from rvops import config
from rvops import simkit as sk
from rvops.mapping import RockLandmark
from rvops.safety import (CommandSource, SafetyParams, SafetyState,
                          TwistCommand, predict_path, safety_gate, watchdog)
from rvops.simkit import RoverState


def _lm(x, y, r=0.2, lm_id=1):
    return RockLandmark(id=lm_id, position=np.array([x, y, 0.1]), radius=r,
                        hits=3, first_seen=1, last_seen=3, confirmed=True)


# -- predict_path ------------------------------------------------------------


def test_predict_path_at_rest():
    samples = predict_path(RoverState(x=1, y=2, theta=0.3),
                           TwistCommand(0.0, 0.0), 1.0, 0.1)
    assert samples.shape == (10, 3)
    assert np.allclose(samples[:, 0], 1) and np.allclose(samples[:, 1], 2)


def test_predict_path_straight_advance():
    samples = predict_path(RoverState(), TwistCommand(1.0, 0.0), 1.0, 0.1)
    assert np.allclose(samples[:, 0], np.arange(1, 11) * 0.1)
    assert np.allclose(samples[:, 1], 0)


def test_predict_path_matches_simulator_stepping():
    cmd = TwistCommand(0.4, 0.7)
    samples = predict_path(RoverState(), cmd, 1.0, 0.1)
    st = RoverState()
    for i in range(10):
        st, _ = sk.step_rover(st, cmd, 0.1)
        assert abs(st.x - samples[i, 0]) < 1e-9
        assert abs(st.y - samples[i, 1]) < 1e-9
        assert abs(st.theta - samples[i, 2]) < 1e-9


def test_predict_path_rejects_bad_params():
    with pytest.raises(ValueError):
        predict_path(RoverState(), TwistCommand(0, 0), 0.0, 0.1)
    with pytest.raises(ValueError):
        predict_path(RoverState(), TwistCommand(0, 0), 1.0, -1)


# -- safety_gate -------------------------------------------------------------


def test_gate_no_landmarks_sentinel():
    cmd = TwistCommand(0.3, 0.0)
    fwd, status = safety_gate(cmd, [], RoverState())
    assert fwd == cmd
    assert status.state == SafetyState.CLEAR
    assert status.clearance == config.CLEARANCE_SENTINEL_M
    assert status.nearest_obstacle_id is None


def test_gate_blocks_head_on():
    fwd, status = safety_gate(TwistCommand(1.0, 0.0), [_lm(0.4, 0.0)],
                              RoverState())
    assert status.state == SafetyState.BLOCKED
    assert fwd.v == 0.0
    assert fwd.source == CommandSource.SAFETY
    assert status.nearest_obstacle_id == 1
    assert status.clearance == 0.0  # contact within horizon, floored at zero


def test_gate_rotation_exemption():
    fwd, status = safety_gate(TwistCommand(0.0, 1.0), [_lm(0.4, 0.0)],
                              RoverState())
    assert fwd.v == 0.0 and fwd.omega == 1.0
    assert status.state != SafetyState.BLOCKED


def test_gate_reverse_exemption():
    fwd, status = safety_gate(TwistCommand(-0.5, 0.0), [_lm(0.4, 0.0)],
                              RoverState())
    assert fwd.v == -0.5
    assert status.state != SafetyState.BLOCKED


def test_gate_warning_band():
    # obstacle ~0.75 m ahead: path stops 0.1..0.3 m short -> warning, unmodified
    fwd, status = safety_gate(TwistCommand(0.3, 0.0), [_lm(0.95, 0.0)],
                              RoverState())
    assert status.state == SafetyState.WARNING
    assert fwd.v == 0.3


def test_gate_clear_far_away():
    fwd, status = safety_gate(TwistCommand(0.3, 0.0), [_lm(5.0, 0.0)],
                              RoverState())
    assert status.state == SafetyState.CLEAR
    assert status.clearance > 3.0


def test_gate_idempotent():
    for lm_x in (0.4, 0.95, 5.0):
        cmd = TwistCommand(0.5, 0.2)
        once, _ = safety_gate(cmd, [_lm(lm_x, 0.0)], RoverState())
        twice, _ = safety_gate(once, [_lm(lm_x, 0.0)], RoverState())
        assert twice == once


def test_gate_monotone_in_landmarks():
    cmd = TwistCommand(0.4, 0.0)
    _, one = safety_gate(cmd, [_lm(3.0, 0.5)], RoverState())
    _, two = safety_gate(cmd, [_lm(3.0, 0.5), _lm(2.0, -0.2, lm_id=2)],
                         RoverState())
    assert two.clearance <= one.clearance


def test_gate_uses_estimated_state():
    # same landmark, rover estimate already past it: no block driving away
    fwd, status = safety_gate(TwistCommand(0.5, 0.0), [_lm(0.0, 0.0)],
                              RoverState(x=1.0, theta=0.0))
    assert status.state == SafetyState.CLEAR
    assert fwd.v == 0.5


# -- watchdog ----------------------------------------------------------------


def test_watchdog_fires_after_timeout():
    hit = watchdog(0, 600_000_000, timeout_ms=500)
    assert hit is not None
    stop, status = hit
    assert stop.v == 0.0 and stop.omega == 0.0
    assert stop.source == CommandSource.SAFETY
    assert status.state == SafetyState.STALE_COMMAND


def test_watchdog_quiet_within_timeout():
    assert watchdog(0, 100_000_000, timeout_ms=500) is None


def test_watchdog_boundary_strict():
    assert watchdog(0, 500_000_000, timeout_ms=500) is None


def test_watchdog_rejects_bad_timeout():
    with pytest.raises(ValueError):
        watchdog(0, 1, timeout_ms=0)
