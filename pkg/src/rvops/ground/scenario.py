"""Headless scenario runs: scripted commands through the full sim + pipeline.

Scenario files are line-oriented text:

    rvscen 1
    scene_seed 7
    duration_s 20
    mode 2d
    safety on
    scene_file flat.json      # optional: overrides scene_seed generation
    goal 3.0 0.0 0.5          # optional: completion target (x y radius)
    t=0.0 v=0.3 w=0.0
    t=5.0 silence             # console stops sending (watchdog exercise)

Runs are deterministic given the file: the simulation clock drives every
stamp and all randomness is counter-based from the scene seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import config
from ..geometry import body_to_camera, default_intrinsics
from ..safety import CommandSource, SafetyState, TwistCommand
from ..simkit import (OdomNoise, RoverState, camera_pose_for_state,
                      check_collision, generate_scene, load_scene, render_rgbd,
                      step_rover)
from ..simkit.rover import OdometryTracker
from ..wire.messages import MetricsReport, MsgType, WireMessage
from ..wire.recordlog import RecordWriter, read_log
from .pipeline import Pipeline, PipelineConfig


@dataclass(frozen=True)
class TimedCommand:
    t: float
    v: float | None    # None = silence (console stops sending)
    omega: float | None


@dataclass
class Scenario:
    scene_seed: int
    duration_s: float
    mode: str = "2d"
    safety_on: bool = True
    scene_file: str | None = None
    goal: tuple[float, float, float] | None = None
    commands: list[TimedCommand] = field(default_factory=list)


def parse_scenario(text: str) -> Scenario:
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValueError("empty scenario file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "rvscen":
        raise ValueError("scenario must start with 'rvscen <version>'")
    if head[1] != "1":
        raise ValueError(f"unsupported scenario version {head[1]!r}")

    scn = Scenario(scene_seed=0, duration_s=0.0)
    seen: set[str] = set()
    for ln in lines[1:]:
        if ln.startswith("t="):
            scn.commands.append(_parse_command(ln))
            continue
        try:
            key, rest = ln.split(None, 1)
        except ValueError:
            raise ValueError(f"malformed scenario line: {ln!r}") from None
        if key in seen:
            raise ValueError(f"duplicate scenario key {key!r}")
        seen.add(key)
        if key == "scene_seed":
            scn.scene_seed = int(rest)
        elif key == "duration_s":
            scn.duration_s = float(rest)
            if scn.duration_s <= 0:
                raise ValueError("duration_s must be positive")
        elif key == "mode":
            if rest not in ("2d", "3d"):
                raise ValueError(f"mode must be 2d or 3d, got {rest!r}")
            scn.mode = rest
        elif key == "safety":
            if rest not in ("on", "off"):
                raise ValueError(f"safety must be on or off, got {rest!r}")
            scn.safety_on = rest == "on"
        elif key == "scene_file":
            scn.scene_file = rest
        elif key == "goal":
            parts = [float(x) for x in rest.split()]
            if len(parts) != 3 or parts[2] <= 0:
                raise ValueError("goal needs: x y radius (radius > 0)")
            scn.goal = (parts[0], parts[1], parts[2])
        else:
            raise ValueError(f"unknown scenario key {key!r}")
    if scn.duration_s <= 0:
        raise ValueError("scenario is missing duration_s")
    scn.commands.sort(key=lambda c: c.t)
    return scn


def _parse_command(ln: str) -> TimedCommand:
    parts = ln.split()
    t = float(parts[0][2:])
    if len(parts) == 2 and parts[1] == "silence":
        return TimedCommand(t=t, v=None, omega=None)
    kv = {}
    for p in parts[1:]:
        k, _, val = p.partition("=")
        if k not in ("v", "w") or not val:
            raise ValueError(f"malformed command line: {ln!r}")
        kv[k] = float(val)
    if set(kv) != {"v", "w"}:
        raise ValueError(f"command line needs v= and w=: {ln!r}")
    return TimedCommand(t=t, v=kv["v"], omega=kv["w"])


def load_scenario(path: str | Path) -> Scenario:
    scn = parse_scenario(Path(path).read_text())
    if scn.scene_file:
        base = Path(path).parent
        scn.scene_file = str((base / scn.scene_file).resolve())
    return scn


def pipeline_config_for(seed: int, safety_on: bool = True) -> PipelineConfig:
    """The pipeline configuration scenario runs and replays both use."""
    return PipelineConfig(seed=seed, safety_enabled=safety_on)


@dataclass
class ScenarioResult:
    metrics: dict
    frames: int
    blocked_events: int
    watchdog_stops: int
    mean_frame_latency_s: float | None
    pipeline: Pipeline

    def metrics_json(self) -> str:
        return json.dumps(self.metrics, sort_keys=True)


def run_scenario(scn: Scenario,
                 record_path: str | Path | None = None,
                 pub_log_path: str | Path | None = None,
                 truth_log_path: str | Path | None = None) -> ScenarioResult:
    """Simulate the scenario in-process (no sockets) and report metrics."""
    scene = load_scene(scn.scene_file) if scn.scene_file else generate_scene(scn.scene_seed)
    k = default_intrinsics()
    extrinsic = body_to_camera()
    pipeline = Pipeline(pipeline_config_for(scn.scene_seed, scn.safety_on))

    rng = np.random.Generator(np.random.Philox(key=np.array(
        [scn.scene_seed & 0xFFFFFFFFFFFFFFFF, config.STREAM_ODOMETRY << 48],
        dtype=np.uint64)))
    noise = OdomNoise()
    truth = RoverState()
    odom = OdometryTracker()
    rover_cmd = TwistCommand(0.0, 0.0, stamp_ns=0, source=CommandSource.SCRIPT)

    recorder = RecordWriter(record_path) if record_path else None
    pub_log = RecordWriter(pub_log_path) if pub_log_path else None
    truth_lines: list[str] = ["rvtruth 1"]

    rock_clear = [(r.x, r.y, r.radius) for r in scene.rocks]
    colliding: set[int] = set()
    collisions = 0
    blocked_events = 0
    min_clearance = config.CLEARANCE_SENTINEL_M
    distance = 0.0
    completed = scn.goal is None
    frame_seq = 0
    pose_seq = 0
    n_ticks = int(round(scn.duration_s / config.SIM_TICK_S))
    elapsed = scn.duration_s

    def publish(pubs: list[WireMessage]) -> None:
        nonlocal blocked_events
        for m in pubs:
            if (m.msg_type == MsgType.SAFETY_STATUS
                    and m.payload.state == SafetyState.BLOCKED):
                blocked_events += 1
            if pub_log:
                pub_log.write(m)

    try:
        for tick in range(n_ticks):
            now_ns = tick * config.SIM_TICK_NS
            now_s = tick * config.SIM_TICK_S

            # Console emulation at 10 Hz: newest command line at or before now.
            if tick % 2 == 0:
                active = None
                for c in scn.commands:
                    if c.t <= now_s + 1e-9:
                        active = c
                if active is not None and active.v is not None:
                    cmd = TwistCommand(active.v, active.omega, stamp_ns=now_ns,
                                       source=CommandSource.SCRIPT)
                    fwd, _, pubs = pipeline.on_console_command(cmd, now_ns)
                    publish(pubs)
                    if fwd is not None:
                        rover_cmd = fwd

            stop, pubs = pipeline.check_watchdog(now_ns)
            publish(pubs)
            if stop is not None:
                rover_cmd = stop

            # Safety re-evaluation of the held command each tick.
            if scn.safety_on:
                regated, _, pubs = pipeline.regate(rover_cmd, now_ns)
                publish(pubs)
                rover_cmd = regated

            truth, (v_meas, om_meas) = step_rover(truth, rover_cmd,
                                                  config.SIM_TICK_S, noise, rng)
            odom.update(v_meas, om_meas, config.SIM_TICK_S)
            now_end = (tick + 1) * config.SIM_TICK_NS
            pose = odom.pose()
            pipeline.on_pose_estimate(pose, now_end)
            if recorder:
                pose_seq += 1
                recorder.write(WireMessage(MsgType.POSE_ESTIMATE, pose_seq,
                                           now_end, pose))

            hits = check_collision(scene, truth, config.ROVER_RADIUS_M)
            collisions += sum(1 for i in hits if i not in colliding)
            colliding = set(hits)
            for rx, ry, rr in rock_clear:
                c = float(np.hypot(truth.x - rx, truth.y - ry)) - rr - config.ROVER_RADIUS_M
                if c < min_clearance:
                    min_clearance = c
            distance += abs(truth.v) * config.SIM_TICK_S

            truth_lines.append(
                f"t={(tick + 1) * config.SIM_TICK_S:.2f} x={truth.x:.6f} "
                f"y={truth.y:.6f} theta={truth.theta:.6f} v={truth.v:.3f} "
                f"omega={truth.omega:.3f} collisions={collisions}")

            if scn.goal is not None:
                gx, gy, gr = scn.goal
                if np.hypot(truth.x - gx, truth.y - gy) <= gr:
                    completed = True
                    elapsed = (tick + 1) * config.SIM_TICK_S
                    break

            if (tick + 1) % config.FRAME_EVERY_TICKS == 0:
                frame_seq += 1
                cam = camera_pose_for_state(scene, truth, extrinsic)
                rgb, depth = render_rgbd(scene, cam, k, seq=frame_seq,
                                         stamp_ns=now_end,
                                         noise_sigma=config.DEPTH_SIGMA_M)
                if recorder:
                    recorder.write(WireMessage(MsgType.RGB_FRAME, frame_seq,
                                               now_end, rgb))
                    recorder.write(WireMessage(MsgType.DEPTH_FRAME, frame_seq,
                                               now_end, depth))
                publish(pipeline.on_depth_frame(depth, rgb))

        report = MetricsReport(elapsed_s=elapsed, collision_count=collisions,
                               min_clearance_m=min_clearance,
                               distance_m=distance, completed=completed)
        publish([pipeline.publication(MsgType.METRICS_REPORT, report,
                                      n_ticks * config.SIM_TICK_NS)])
    finally:
        if recorder:
            recorder.close()
        if pub_log:
            pub_log.close()
        if truth_log_path:
            Path(truth_log_path).write_text("\n".join(truth_lines) + "\n")

    lat = pipeline.frame_latencies_s
    metrics = {
        "blocked_events": blocked_events,
        "collisions": collisions,
        "completed": completed,
        "distance_m": distance,
        "duration_s": elapsed,
        "frames": frame_seq,
        "min_clearance_m": min_clearance,
        "mode": scn.mode,
        "safety": "on" if scn.safety_on else "off",
        "scene_seed": scn.scene_seed,
        "watchdog_stops": pipeline.counters["watchdog_stops"],
    }
    return ScenarioResult(metrics=metrics, frames=frame_seq,
                          blocked_events=blocked_events,
                          watchdog_stops=pipeline.counters["watchdog_stops"],
                          mean_frame_latency_s=(sum(lat) / len(lat) if lat else None),
                          pipeline=pipeline)


def replay_through_pipeline(log_path: str | Path, cfg: PipelineConfig,
                            pub_log_path: str | Path | None = None,
                            ) -> list[WireMessage]:
    """Re-run the ground pipeline over a recorded rover stream."""
    msgs, _ = read_log(log_path)
    pipeline = Pipeline(cfg)
    pubs: list[WireMessage] = []
    held_rgb = None
    for m in msgs:
        if m.msg_type == MsgType.POSE_ESTIMATE:
            pipeline.on_pose_estimate(m.payload, m.stamp_ns)
        elif m.msg_type == MsgType.RGB_FRAME:
            held_rgb = m.payload
        elif m.msg_type == MsgType.DEPTH_FRAME:
            pubs.extend(pipeline.on_depth_frame(m.payload, held_rgb))
    if pub_log_path:
        with RecordWriter(pub_log_path) as w:
            for m in pubs:
                w.write(m)
    return pubs
