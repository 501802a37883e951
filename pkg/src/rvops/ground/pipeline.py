"""Ground-station processing pipeline: frames in, world model + gated
commands out. Single-writer state; publications carry per-topic sequence
numbers that strictly increase."""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .. import config
from ..geometry import (CameraIntrinsics, Pose, body_to_camera,
                        default_intrinsics, pose_compose, yaw_of)
from ..mapping import (LandmarkTracker, VoxelGrid, associate_landmarks,
                       build_heightmap_mesh, voxel_centroids, voxel_insert)
from ..perception import DetectorParams, detect_rocks, frame_to_points
from ..safety import (SafetyParams, SafetyState, SafetyStatus, TwistCommand,
                      path_clearance, predict_path, safety_gate, watchdog)
from ..simkit.frames import DepthFrame, RgbFrame
from ..simkit.rover import TwistLimits
from ..wire.messages import MsgType, PointCloudChunk, WireMessage


@dataclass
class PipelineConfig:
    intrinsics: CameraIntrinsics = field(default_factory=default_intrinsics)
    extrinsic: Pose = field(default_factory=body_to_camera)
    detector: DetectorParams = DetectorParams()
    gate_m: float = 0.3
    confirm_hits: int = 3
    voxel_size: float = 0.05
    mesh_roi: tuple = ((-5.0, -5.0), (5.0, 5.0))
    mesh_cell: float = 0.10
    mesh_regen_frames: int = 5
    safety: SafetyParams = SafetyParams()
    safety_enabled: bool = True
    limits: TwistLimits = TwistLimits()
    pose_pair_tol_ns: int = 200_000_000
    watchdog_timeout_ms: int = config.WATCHDOG_TIMEOUT_MS
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mesh_regen_frames < 1:
            raise ValueError("mesh regen interval must be >= 1")


class EstState(NamedTuple):
    x: float
    y: float
    theta: float


class Pipeline:
    """Everything between the rover link and the console publications."""

    def __init__(self, cfg: PipelineConfig | None = None) -> None:
        self.cfg = cfg or PipelineConfig()
        self.grid = VoxelGrid(self.cfg.voxel_size)
        self.tracker = LandmarkTracker(confirm_hits=self.cfg.confirm_hits)
        self.poses: deque[tuple[int, Pose]] = deque(maxlen=64)
        self.last_cmd_stamp_ns: int | None = None
        self.last_status: SafetyStatus | None = None
        self.counters = {
            "frames_processed": 0,
            "stale_pose_skips": 0,
            "no_ground_frames": 0,
            "malformed_commands": 0,
            "watchdog_stops": 0,
        }
        self.frame_latencies_s: list[float] = []
        self._topic_seq: dict[int, int] = {}
        self._mesh_generation = 0

    # -- publications ------------------------------------------------------

    def publication(self, t: MsgType, payload, stamp_ns: int) -> WireMessage:
        seq = self._topic_seq.get(int(t), 0) + 1
        self._topic_seq[int(t)] = seq
        return WireMessage(t, seq, stamp_ns, payload)

    # -- rover inputs ------------------------------------------------------

    def on_pose_estimate(self, pose: Pose, stamp_ns: int) -> None:
        self.poses.append((stamp_ns, pose))

    def _nearest_pose(self, stamp_ns: int) -> Pose | None:
        best = None
        best_dt = self.cfg.pose_pair_tol_ns
        for ts, pose in self.poses:
            dt = abs(ts - stamp_ns)
            if dt <= best_dt:
                best = pose
                best_dt = dt
        return best

    def latest_estimate(self) -> EstState:
        if not self.poses:
            return EstState(0.0, 0.0, 0.0)
        _, pose = self.poses[-1]
        return EstState(float(pose.translation[0]), float(pose.translation[1]),
                        yaw_of(pose.rotation))

    def on_depth_frame(self, depth: DepthFrame, rgb: RgbFrame | None = None,
                       ) -> list[WireMessage]:
        """Run detection + mapping for one frame; returns the publications.

        The frame is skipped (with a counter) when no pose estimate lies
        within the pairing tolerance of its timestamp.
        """
        t0 = time.perf_counter()
        pose = self._nearest_pose(depth.stamp_ns)
        if pose is None:
            self.counters["stale_pose_skips"] += 1
            return []
        cam = pose_compose(pose, self.cfg.extrinsic)
        pixels, pts = frame_to_points(depth, self.cfg.intrinsics, cam,
                                      self.cfg.detector.stride)
        dets, plane = detect_rocks(depth, self.cfg.intrinsics, cam,
                                   self.cfg.detector,
                                   seed=(self.cfg.seed, depth.seq),
                                   points=(pixels, pts))
        if plane is None:
            self.counters["no_ground_frames"] += 1
            return [self.publication(MsgType.DETECTION_SET, [], depth.stamp_ns)]

        voxel_insert(self.grid, pts)
        associate_landmarks(self.tracker, dets, depth.seq, self.cfg.gate_m)

        pubs = [self.publication(MsgType.DETECTION_SET, dets, depth.stamp_ns),
                self.publication(MsgType.LANDMARK_SET,
                          [self.tracker.landmarks[i].snapshot()
                           for i in sorted(self.tracker.landmarks)],
                          depth.stamp_ns)]
        self.counters["frames_processed"] += 1
        if self.counters["frames_processed"] % self.cfg.mesh_regen_frames == 0:
            self._mesh_generation += 1
            mesh = build_heightmap_mesh(self.grid, self.cfg.mesh_roi,
                                        self.cfg.mesh_cell,
                                        generation=self._mesh_generation)
            pubs.append(self.publication(MsgType.MESH_CHUNK, mesh, depth.stamp_ns))
            pubs.append(self.publication(MsgType.POINT_CLOUD_CHUNK,
                                  PointCloudChunk(voxel_centroids(self.grid)),
                                  depth.stamp_ns))
        self.frame_latencies_s.append(time.perf_counter() - t0)
        return pubs

    # -- command path ------------------------------------------------------

    def _clamp(self, cmd: TwistCommand) -> TwistCommand:
        return replace(cmd,
                       v=float(np.clip(cmd.v, -self.cfg.limits.v_max,
                                       self.cfg.limits.v_max)),
                       omega=float(np.clip(cmd.omega, -self.cfg.limits.omega_max,
                                           self.cfg.limits.omega_max)))

    def _evaluate(self, cmd: TwistCommand) -> tuple[TwistCommand, SafetyStatus]:
        est = self.latest_estimate()
        confirmed = self.tracker.confirmed()
        if self.cfg.safety_enabled:
            return safety_gate(cmd, confirmed, est, self.cfg.safety)
        samples = predict_path(est, cmd, self.cfg.safety.horizon,
                               self.cfg.safety.step)
        clearance, nearest = path_clearance(samples, confirmed,
                                            self.cfg.safety.r_rover)
        state = (SafetyState.WARNING if clearance < self.cfg.safety.warn_clearance
                 else SafetyState.CLEAR)
        return cmd, SafetyStatus(state=state, nearest_obstacle_id=nearest,
                                 clearance=max(0.0, clearance),
                                 horizon=self.cfg.safety.horizon)

    def on_console_command(self, cmd: TwistCommand, now_ns: int,
                           ) -> tuple[TwistCommand | None, SafetyStatus | None,
                                      list[WireMessage]]:
        """Clamp, gate, and forward one operator command."""
        if not (math.isfinite(cmd.v) and math.isfinite(cmd.omega)):
            self.counters["malformed_commands"] += 1
            return None, None, []
        self.last_cmd_stamp_ns = now_ns
        fwd, status = self._evaluate(self._clamp(cmd))
        self.last_status = status
        return fwd, status, [self.publication(MsgType.SAFETY_STATUS, status, now_ns)]

    def regate(self, cmd: TwistCommand, now_ns: int,
               ) -> tuple[TwistCommand, SafetyStatus, list[WireMessage]]:
        """Per-tick re-evaluation of the rover's held command (no watchdog feed)."""
        fwd, status = self._evaluate(cmd)
        self.last_status = status
        return fwd, status, [self.publication(MsgType.SAFETY_STATUS, status, now_ns)]

    def check_watchdog(self, now_ns: int,
                       ) -> tuple[TwistCommand | None, list[WireMessage]]:
        """Emit a stop when the command link has gone quiet."""
        if self.last_cmd_stamp_ns is None:
            return None, []
        hit = watchdog(self.last_cmd_stamp_ns, now_ns,
                       self.cfg.watchdog_timeout_ms)
        if hit is None:
            return None, []
        stop, status = hit
        self.counters["watchdog_stops"] += 1
        self.last_status = status
        return stop, [self.publication(MsgType.SAFETY_STATUS, status, now_ns)]

    # -- introspection -----------------------------------------------------

    def snapshot(self) -> dict:
        lms = self.tracker.landmarks
        return {
            "counters": dict(self.counters),
            "topic_seq": {MsgType(t).name.lower(): s
                          for t, s in sorted(self._topic_seq.items())},
            "landmarks": len(lms),
            "confirmed_landmarks": sum(1 for lm in lms.values() if lm.confirmed),
            "voxel_cells": len(self.grid.cells),
            "mean_frame_latency_ms": (
                1e3 * sum(self.frame_latencies_s) / len(self.frame_latencies_s)
                if self.frame_latencies_s else None),
        }
