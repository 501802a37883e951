"""JSON mirror of the binary protocol for the WebSocket console link.

One JSON object per message: {"type": <name>, "seq", "stamp_ns", payload
fields}. Image data is base64; everything else stays native JSON so the
browser does no binary parsing.
"""

from __future__ import annotations

import base64

import numpy as np

from ..geometry import Pose, Quat
from ..mapping import SurfaceMesh
from ..safety import CommandSource, SafetyState, SafetyStatus, TwistCommand
from .messages import (Heartbeat, Hello, MsgType, Role, Subscribe, WireMessage)

TYPE_NAMES = {
    MsgType.HELLO: "hello",
    MsgType.SUBSCRIBE: "subscribe",
    MsgType.RGB_FRAME: "rgb_frame",
    MsgType.DEPTH_FRAME: "depth_frame",
    MsgType.POSE_ESTIMATE: "pose_estimate",
    MsgType.DETECTION_SET: "detection_set",
    MsgType.LANDMARK_SET: "landmark_set",
    MsgType.POINT_CLOUD_CHUNK: "point_cloud_chunk",
    MsgType.MESH_CHUNK: "mesh_chunk",
    MsgType.TWIST_COMMAND: "twist_command",
    MsgType.SAFETY_STATUS: "safety_status",
    MsgType.HEARTBEAT: "heartbeat",
    MsgType.METRICS_REPORT: "metrics_report",
}
NAME_TYPES = {v: k for k, v in TYPE_NAMES.items()}

_SOURCE_NAMES = {CommandSource.CONSOLE: "console",
                 CommandSource.SCRIPT: "script",
                 CommandSource.SAFETY: "safety"}
_STATE_NAMES = {SafetyState.CLEAR: "clear",
                SafetyState.WARNING: "warning",
                SafetyState.BLOCKED: "blocked",
                SafetyState.STALE_COMMAND: "stale_command"}


def message_to_json(m: WireMessage) -> dict:
    out: dict = {"type": TYPE_NAMES[m.msg_type], "seq": m.seq,
                 "stamp_ns": m.stamp_ns}
    p = m.payload
    t = m.msg_type
    if t == MsgType.HELLO:
        out.update(role=int(p.role), proto_version=p.proto_version)
    elif t == MsgType.SUBSCRIBE:
        out.update(mask=p.mask)
    elif t in (MsgType.RGB_FRAME, MsgType.DEPTH_FRAME):
        raw = p.data.astype("<u2").tobytes() if t == MsgType.DEPTH_FRAME else p.data.tobytes()
        out.update(width=p.width, height=p.height,
                   data=base64.b64encode(raw).decode("ascii"))
    elif t == MsgType.POSE_ESTIMATE:
        q, tr = p.rotation, p.translation
        out.update(qw=q.w, qx=q.x, qy=q.y, qz=q.z,
                   tx=tr[0], ty=tr[1], tz=tr[2])
    elif t == MsgType.DETECTION_SET:
        out["detections"] = [{
            "bbox": list(d.bbox), "pixel_count": d.pixel_count,
            "centroid": d.centroid_world.tolist(), "radius": d.radius_est,
            "confidence": d.confidence, "frame_seq": d.frame_seq,
        } for d in p]
    elif t == MsgType.LANDMARK_SET:
        out["landmarks"] = [{
            "id": lm.id, "position": lm.position.tolist(), "radius": lm.radius,
            "hits": lm.hits, "confirmed": lm.confirmed,
        } for lm in p]
    elif t == MsgType.POINT_CLOUD_CHUNK:
        out.update(count=len(p.points), points=p.points.astype(float).tolist())
    elif t == MsgType.MESH_CHUNK:
        out.update(vertices=np.asarray(p.vertices, dtype=float).tolist(),
                   triangles=np.asarray(p.triangles, dtype=int).tolist(),
                   generation=p.generation)
    elif t == MsgType.TWIST_COMMAND:
        out.update(v=p.v, omega=p.omega, source=_SOURCE_NAMES[p.source])
    elif t == MsgType.SAFETY_STATUS:
        out.update(state=_STATE_NAMES[p.state],
                   nearest_obstacle_id=p.nearest_obstacle_id,
                   clearance=p.clearance, horizon=p.horizon)
    elif t == MsgType.HEARTBEAT:
        pass
    elif t == MsgType.METRICS_REPORT:
        out.update(elapsed_s=p.elapsed_s, collisions=p.collision_count,
                   min_clearance_m=p.min_clearance_m, distance_m=p.distance_m,
                   completed=p.completed)
    return out


def message_from_json(d: dict) -> WireMessage:
    """Parse a console-originated JSON message.

    Only the console-to-ground types are accepted; the server-to-console
    direction never round-trips back through JSON.
    """
    name = d.get("type")
    if name not in NAME_TYPES:
        raise ValueError(f"unknown message type {name!r}")
    t = NAME_TYPES[name]
    seq = int(d.get("seq", 0))
    stamp = int(d.get("stamp_ns", 0))
    if t == MsgType.HELLO:
        return WireMessage(t, seq, stamp, Hello(Role(int(d["role"])),
                                                int(d.get("proto_version", 1))))
    if t == MsgType.SUBSCRIBE:
        return WireMessage(t, seq, stamp, Subscribe(int(d["mask"])))
    if t == MsgType.TWIST_COMMAND:
        source = {v: k for k, v in _SOURCE_NAMES.items()}[d.get("source", "console")]
        return WireMessage(t, seq, stamp, TwistCommand(
            v=float(d["v"]), omega=float(d["omega"]), stamp_ns=stamp, source=source))
    if t == MsgType.HEARTBEAT:
        return WireMessage(t, seq, stamp, Heartbeat())
    raise ValueError(f"type {name!r} is not accepted from consoles")
