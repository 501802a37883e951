"""Request/response models for the ground station's HTTP surface."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str = "ok"
    uptime_s: float


class SafetyStatusModel(BaseModel):
    state: str
    nearest_obstacle_id: int | None = None
    clearance_m: float
    horizon_s: float


class StatusResponse(BaseModel):
    rover_connected: bool
    console_count: int
    counters: dict[str, int]
    topic_seq: dict[str, int]
    landmarks: int
    confirmed_landmarks: int
    voxel_cells: int
    mean_frame_latency_ms: float | None = None
    safety: SafetyStatusModel | None = None


class CommandRequest(BaseModel):
    v: float = Field(description="linear velocity, m/s")
    omega: float = Field(description="angular velocity, rad/s")


class CommandResponse(BaseModel):
    forwarded_v: float
    forwarded_omega: float
    delivered: bool
    safety: SafetyStatusModel
