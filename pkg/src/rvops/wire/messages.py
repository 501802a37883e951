"""Typed message payloads and their bit-exact little-endian codecs.

Every payload encodes in declared field order with no padding. Frames carry
their envelope's seq/stamp; payload codecs receive those on decode so the
reconstructed objects are complete.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from ..geometry import Pose, Quat
from ..mapping import RockLandmark, SurfaceMesh
from ..perception import Detection
from ..safety import CommandSource, SafetyState, SafetyStatus, TwistCommand
from ..simkit.frames import DepthFrame, RgbFrame


class WireDecodeError(ValueError):
    """Payload bytes inconsistent with the declared schema."""


class MsgType(IntEnum):
    HELLO = 1
    SUBSCRIBE = 2
    RGB_FRAME = 3
    DEPTH_FRAME = 4
    POSE_ESTIMATE = 5
    DETECTION_SET = 6
    LANDMARK_SET = 7
    POINT_CLOUD_CHUNK = 8
    MESH_CHUNK = 9
    TWIST_COMMAND = 10
    SAFETY_STATUS = 11
    HEARTBEAT = 12
    METRICS_REPORT = 13


class Role(IntEnum):
    ROVER = 1
    GROUND = 2
    CONSOLE = 3


PROTO_VERSION = 1


@dataclass(frozen=True)
class Hello:
    role: Role
    proto_version: int = PROTO_VERSION


@dataclass(frozen=True)
class Subscribe:
    """Bitmask of msg_types; bit (t - 1) subscribes type t."""

    mask: int

    @staticmethod
    def of(*types: MsgType) -> "Subscribe":
        mask = 0
        for t in types:
            mask |= 1 << (int(t) - 1)
        return Subscribe(mask)

    def wants(self, t: MsgType) -> bool:
        return bool(self.mask & (1 << (int(t) - 1)))


@dataclass(frozen=True)
class Heartbeat:
    pass


@dataclass(frozen=True)
class MetricsReport:
    elapsed_s: float
    collision_count: int
    min_clearance_m: float
    distance_m: float
    completed: bool


@dataclass(eq=False)
class PointCloudChunk:
    points: np.ndarray  # (N, 3) float32

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=np.float32).reshape(-1, 3)


@dataclass(eq=False)
class WireMessage:
    msg_type: MsgType
    seq: int
    stamp_ns: int
    payload: object


def _need(data: bytes, n: int, what: str) -> None:
    if len(data) < n:
        raise WireDecodeError(f"truncated {what}: need {n} bytes, have {len(data)}")


_DET = struct.Struct("<4HI3dddI")
_LM = struct.Struct("<I3ddIB")
_POSE = struct.Struct("<7d")
_TWIST = struct.Struct("<ddB")
_STATUS = struct.Struct("<BIdd")
_METRICS = struct.Struct("<dIddB")


def encode_payload(msg_type: MsgType, p) -> bytes:
    if msg_type == MsgType.HELLO:
        return struct.pack("<BB", int(p.role), p.proto_version)
    if msg_type == MsgType.SUBSCRIBE:
        return struct.pack("<H", p.mask)
    if msg_type == MsgType.RGB_FRAME:
        return struct.pack("<HH", p.width, p.height) + p.data.tobytes()
    if msg_type == MsgType.DEPTH_FRAME:
        return struct.pack("<HH", p.width, p.height) + p.data.astype("<u2").tobytes()
    if msg_type == MsgType.POSE_ESTIMATE:
        q, t = p.rotation, p.translation
        return _POSE.pack(q.w, q.x, q.y, q.z, t[0], t[1], t[2])
    if msg_type == MsgType.DETECTION_SET:
        out = [struct.pack("<H", len(p))]
        for d in p:
            out.append(_DET.pack(d.bbox[0], d.bbox[1], d.bbox[2], d.bbox[3],
                                 d.pixel_count, d.centroid_world[0],
                                 d.centroid_world[1], d.centroid_world[2],
                                 d.radius_est, d.confidence, d.frame_seq))
        return b"".join(out)
    if msg_type == MsgType.LANDMARK_SET:
        out = [struct.pack("<H", len(p))]
        for lm in p:
            out.append(_LM.pack(lm.id, lm.position[0], lm.position[1],
                                lm.position[2], lm.radius, lm.hits,
                                1 if lm.confirmed else 0))
        return b"".join(out)
    if msg_type == MsgType.POINT_CLOUD_CHUNK:
        pts = p.points.astype("<f4")
        return struct.pack("<I", len(pts)) + pts.tobytes()
    if msg_type == MsgType.MESH_CHUNK:
        verts = p.vertices.astype("<f4")
        tris = p.triangles.astype("<u4")
        return (struct.pack("<I", len(verts)) + verts.tobytes()
                + struct.pack("<I", len(tris)) + tris.tobytes()
                + struct.pack("<I", p.generation))
    if msg_type == MsgType.TWIST_COMMAND:
        return _TWIST.pack(p.v, p.omega, int(p.source))
    if msg_type == MsgType.SAFETY_STATUS:
        nid = 0 if p.nearest_obstacle_id is None else p.nearest_obstacle_id
        return _STATUS.pack(int(p.state), nid, p.clearance, p.horizon)
    if msg_type == MsgType.HEARTBEAT:
        return b""
    if msg_type == MsgType.METRICS_REPORT:
        return _METRICS.pack(p.elapsed_s, p.collision_count, p.min_clearance_m,
                             p.distance_m, 1 if p.completed else 0)
    raise ValueError(f"unknown msg_type {msg_type}")


def decode_payload(msg_type: int, data: bytes, seq: int = 0, stamp_ns: int = 0):
    try:
        mt = MsgType(msg_type)
    except ValueError as e:
        raise WireDecodeError(str(e)) from None
    try:
        return _decode(mt, data, seq, stamp_ns)
    except (struct.error, ValueError) as e:
        if isinstance(e, WireDecodeError):
            raise
        raise WireDecodeError(f"{mt.name}: {e}") from None


def _decode(mt: MsgType, data: bytes, seq: int, stamp_ns: int):
    if mt == MsgType.HELLO:
        _need(data, 2, "hello")
        role, ver = struct.unpack_from("<BB", data)
        _exact(data, 2)
        return Hello(Role(role), ver)
    if mt == MsgType.SUBSCRIBE:
        _need(data, 2, "subscribe")
        _exact(data, 2)
        return Subscribe(struct.unpack_from("<H", data)[0])
    if mt in (MsgType.RGB_FRAME, MsgType.DEPTH_FRAME):
        _need(data, 4, "frame header")
        w, h = struct.unpack_from("<HH", data)
        if mt == MsgType.RGB_FRAME:
            _exact(data, 4 + 3 * w * h)
            arr = np.frombuffer(data, dtype=np.uint8, offset=4).reshape(h, w, 3).copy()
            return RgbFrame(seq=seq, stamp_ns=stamp_ns, width=w, height=h, data=arr)
        _exact(data, 4 + 2 * w * h)
        arr = np.frombuffer(data, dtype="<u2", offset=4).reshape(h, w).copy()
        return DepthFrame(seq=seq, stamp_ns=stamp_ns, width=w, height=h, data=arr)
    if mt == MsgType.POSE_ESTIMATE:
        _exact(data, _POSE.size)
        qw, qx, qy, qz, tx, ty, tz = _POSE.unpack(data)
        return Pose(Quat(qw, qx, qy, qz), np.array([tx, ty, tz]))
    if mt == MsgType.DETECTION_SET:
        _need(data, 2, "detection count")
        (n,) = struct.unpack_from("<H", data)
        _exact(data, 2 + n * _DET.size)
        dets = []
        for i in range(n):
            (u0, v0, u1, v1, px, cx, cy, cz, r, conf, fseq) = _DET.unpack_from(
                data, 2 + i * _DET.size)
            dets.append(Detection(bbox=(u0, v0, u1, v1), pixel_count=px,
                                  centroid_world=np.array([cx, cy, cz]),
                                  radius_est=r, confidence=conf, frame_seq=fseq))
        return dets
    if mt == MsgType.LANDMARK_SET:
        _need(data, 2, "landmark count")
        (n,) = struct.unpack_from("<H", data)
        _exact(data, 2 + n * _LM.size)
        lms = []
        for i in range(n):
            (lid, px, py, pz, r, hits, conf) = _LM.unpack_from(data, 2 + i * _LM.size)
            lms.append(RockLandmark(id=lid, position=np.array([px, py, pz]),
                                    radius=r, hits=hits, first_seen=0,
                                    last_seen=0, confirmed=bool(conf)))
        return lms
    if mt == MsgType.POINT_CLOUD_CHUNK:
        _need(data, 4, "point count")
        (n,) = struct.unpack_from("<I", data)
        _exact(data, 4 + 12 * n)
        pts = np.frombuffer(data, dtype="<f4", offset=4).reshape(n, 3).copy()
        return PointCloudChunk(points=pts)
    if mt == MsgType.MESH_CHUNK:
        _need(data, 4, "vertex count")
        (nv,) = struct.unpack_from("<I", data)
        off = 4 + 12 * nv
        _need(data, off + 4, "triangle count")
        verts = np.frombuffer(data, dtype="<f4", offset=4, count=3 * nv).reshape(nv, 3)
        (nt,) = struct.unpack_from("<I", data, off)
        _exact(data, off + 4 + 12 * nt + 4)
        tris = np.frombuffer(data, dtype="<u4", offset=off + 4, count=3 * nt).reshape(nt, 3)
        (gen,) = struct.unpack_from("<I", data, off + 4 + 12 * nt)
        return SurfaceMesh(vertices=verts.astype(np.float64),
                           triangles=tris.astype(np.int64), generation=gen)
    if mt == MsgType.TWIST_COMMAND:
        _exact(data, _TWIST.size)
        v, omega, source = _TWIST.unpack(data)
        return TwistCommand(v=v, omega=omega, stamp_ns=stamp_ns,
                            source=CommandSource(source))
    if mt == MsgType.SAFETY_STATUS:
        _exact(data, _STATUS.size)
        state, nid, clearance, horizon = _STATUS.unpack(data)
        return SafetyStatus(state=SafetyState(state),
                            nearest_obstacle_id=None if nid == 0 else nid,
                            clearance=clearance, horizon=horizon)
    if mt == MsgType.HEARTBEAT:
        _exact(data, 0)
        return Heartbeat()
    if mt == MsgType.METRICS_REPORT:
        _exact(data, _METRICS.size)
        elapsed, coll, clear, dist, comp = _METRICS.unpack(data)
        return MetricsReport(elapsed_s=elapsed, collision_count=coll,
                             min_clearance_m=clear, distance_m=dist,
                             completed=bool(comp))
    raise WireDecodeError(f"unhandled msg_type {mt}")


def _exact(data: bytes, n: int) -> None:
    if len(data) != n:
        raise WireDecodeError(f"payload length {len(data)} != declared {n}")
