"""Embedded acceptance suite: every check prints one pass/fail line.

Each check is independent and uses its own oracle: construction parameters
for the plane fit, closed-form sphere geometry for detection truth, a
bitwise CRC reference for the codec, and byte comparison of repeated runs
for determinism.
"""

from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import config
from .geometry import (CameraIntrinsics, Pose, Quat, back_project,
                       body_to_camera, default_intrinsics, pose_compose,
                       pose_inverse, project, quat_rotate, rotation_matrix,
                       transform_point)
from .ground.scenario import (Scenario, TimedCommand, pipeline_config_for,
                              replay_through_pipeline, run_scenario)
from .mapping import (LandmarkTracker, RockLandmark, SurfaceMesh,
                      associate_landmarks)
from .perception import Detection, DetectorParams, detect_rocks, fit_ground_plane_ransac
from .safety import CommandSource, SafetyState, SafetyStatus, TwistCommand
from .simkit import (Rock, RoverState, Scene, SceneParams,
                     camera_pose_for_state, generate_scene, render_depth,
                     save_scene, terrain_height)
from .wire.framing import StreamDecoder, crc32, encode_message
from .wire.messages import (Heartbeat, Hello, MetricsReport, MsgType,
                            PointCloudChunk, Role, Subscribe, WireMessage)
from .wire.recordlog import read_log


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    elapsed_s: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag}  {self.name:<14} {self.detail} [{self.elapsed_s:.1f}s]"


# --------------------------------------------------------------------------
# geometry: 10,000 seeded random cases per round-trip family, 1e-9 bounds


def check_geometry() -> tuple[bool, str]:
    rng = np.random.default_rng(20240901)
    n = 10_000
    tol = 1e-9
    k = default_intrinsics()

    quats = rng.normal(size=(n, 4))
    vecs = rng.uniform(-10, 10, size=(n, 3))
    worst = 0.0
    for i in range(n):
        q = Quat(*quats[i])
        v = vecs[i]
        err = abs(np.linalg.norm(quat_rotate(q, v)) - np.linalg.norm(v))
        back = quat_rotate(q.conjugate(), quat_rotate(q, v))
        worst = max(worst, err, float(np.max(np.abs(back - v))))
    if worst > tol:
        return False, f"quat round-trip error {worst:.2e} > {tol}"

    qa = rng.normal(size=(n, 4))
    qb = rng.normal(size=(n, 4))
    ta = rng.uniform(-5, 5, size=(n, 3))
    tb = rng.uniform(-5, 5, size=(n, 3))
    ps = rng.uniform(-5, 5, size=(n, 3))
    worst = 0.0
    for i in range(n):
        a = Pose(Quat(*qa[i]), ta[i])
        b = Pose(Quat(*qb[i]), tb[i])
        ident = pose_compose(a, pose_inverse(a))
        err = float(np.linalg.norm(ident.translation))
        q = ident.rotation
        err = max(err, 2.0 * math.atan2(math.hypot(q.x, q.y, q.z), abs(q.w)))
        lhs = transform_point(pose_compose(a, b), ps[i])
        rhs = transform_point(a, transform_point(b, ps[i]))
        worst = max(worst, err, float(np.max(np.abs(lhs - rhs))))
    if worst > tol:
        return False, f"pose round-trip error {worst:.2e} > {tol}"

    us = rng.uniform(0, k.width, size=n)
    vs = rng.uniform(0, k.height, size=n)
    zs = rng.uniform(0.1, 10.0, size=n)
    worst = 0.0
    for i in range(n):
        uv = project(k, back_project(k, us[i], vs[i], zs[i]))
        assert uv is not None
        worst = max(worst, abs(uv[0] - us[i]), abs(uv[1] - vs[i]))
    if worst > tol:
        return False, f"projection round-trip error {worst:.2e} > {tol}"
    return True, f"3x{n} cases, worst error within 1e-9"


# --------------------------------------------------------------------------
# plane fit: plane known by construction, 25% outliers


def check_plane_fit() -> tuple[bool, str]:
    rng = np.random.default_rng(7151)
    params = DetectorParams()
    good = 0
    worst_angle = 0.0
    worst_off = 0.0
    for trial in range(100):
        tilt = rng.uniform(0, math.radians(25))
        azim = rng.uniform(0, 2 * math.pi)
        normal = np.array([math.sin(tilt) * math.cos(azim),
                           math.sin(tilt) * math.sin(azim),
                           math.cos(tilt)])
        d_true = rng.uniform(-1, 1)
        # orthonormal basis in the plane
        e1 = np.cross(normal, [0.0, 0.0, 1.0])
        if np.linalg.norm(e1) < 1e-6:
            e1 = np.array([1.0, 0.0, 0.0])
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(normal, e1)
        origin = -d_true * normal
        ab = rng.uniform(-2, 2, size=(100, 2))
        inliers = origin + ab[:, :1] * e1 + ab[:, 1:] * e2
        outliers = inliers[rng.integers(0, 100, size=25)] \
            + normal * rng.uniform(0.1, 1.0, size=(25, 1)) \
            + np.column_stack([rng.uniform(-0.5, 0.5, size=(25, 2)),
                               np.zeros(25)])
        pts = np.vstack([inliers, outliers])
        plane = fit_ground_plane_ransac(pts, params, seed=(99, trial))
        angle = math.degrees(math.acos(min(1.0, abs(float(plane.normal @ normal)))))
        off = abs(plane.d - d_true)
        worst_angle = max(worst_angle, angle)
        worst_off = max(worst_off, off)
        if angle < 0.5 and off < 0.005:
            good += 1
    ok = good >= 99
    return ok, (f"{good}/100 trials within 0.5 deg / 5 mm "
                f"(worst {worst_angle:.3f} deg, {worst_off * 1e3:.2f} mm)")


# --------------------------------------------------------------------------
# detection oracle: closed-form sphere geometry as truth


def _stride_ray_dirs(k: CameraIntrinsics, cam_pose: Pose, stride: int):
    us = np.arange(0, k.width, stride, dtype=np.float64)
    vs = np.arange(0, k.height, stride, dtype=np.float64)
    uu, vv = np.meshgrid(us, vs)
    d_cam = np.stack([(uu - k.cx) / k.fx, (vv - k.cy) / k.fy,
                      np.ones_like(uu)], axis=-1)
    d_cam /= np.linalg.norm(d_cam, axis=-1, keepdims=True)
    return d_cam.reshape(-1, 3) @ rotation_matrix(cam_pose.rotation).T


def oracle_rock_surface(scene: Scene, rock: Rock, cam_pose: Pose,
                        k: CameraIntrinsics, stride: int, h_min: float):
    """True rock-surface points on the stride grid, by closed-form ray-sphere
    intersection (independent of the rendering kernel)."""
    dirs = _stride_ray_dirs(k, cam_pose, stride)
    o = cam_pose.translation
    c = np.array([rock.x, rock.y, terrain_height(scene, rock.x, rock.y)])
    oc = o - c
    b = dirs @ oc
    disc = b * b - (oc @ oc - rock.radius ** 2)
    hit = disc >= 0
    s = np.where(hit, -b - np.sqrt(np.where(hit, disc, 0.0)), np.inf)
    ok = hit & (s > 1e-9) & (s <= config.DEPTH_MAX_RANGE_M)
    pts = o + s[:, None] * dirs
    above = pts[:, 2] - terrain_height(scene, pts[:, 0], pts[:, 1]) > h_min
    visible = int(np.count_nonzero(ok))
    pts = pts[ok & above]
    return pts, visible


def _lower_median_point(pts: np.ndarray) -> np.ndarray:
    out = np.empty(3)
    for axis in range(3):
        s = np.sort(pts[:, axis])
        out[axis] = s[(len(s) - 1) // 2]
    return out


def check_detection_oracle() -> tuple[bool, str]:
    k = default_intrinsics()
    extr = body_to_camera()
    params = DetectorParams()
    sigma = config.DEPTH_SIGMA_M
    tol = 0.05 + 2 * sigma
    qualifying = 0
    detected = 0
    worst = 0.0
    misses = []
    for i in range(50):
        seed = 3000 + i
        scene = generate_scene(seed, SceneParams(rock_count=1))
        rock = scene.rocks[0]
        st = RoverState(theta=math.atan2(rock.y, rock.x))
        cam = camera_pose_for_state(scene, st, extr)
        oracle_pts, visible = oracle_rock_surface(scene, rock, cam, k,
                                                  params.stride, params.h_min)
        if visible < 30 or len(oracle_pts) < 4:
            continue
        qualifying += 1
        depth = render_depth(scene, cam, k, seq=1, stamp_ns=0, noise_sigma=sigma)
        dets, _ = detect_rocks(depth, k, cam, params, seed=(seed, 1))
        if not dets:
            misses.append(seed)
            continue
        best = min(dets, key=lambda d: np.linalg.norm(
            d.centroid_world[:2] - [rock.x, rock.y]))
        ref = _lower_median_point(oracle_pts)
        err = float(np.linalg.norm(best.centroid_world - ref))
        center_err = float(np.hypot(best.centroid_world[0] - rock.x,
                                    best.centroid_world[1] - rock.y))
        if err > tol or center_err > 0.8 * rock.radius + tol:
            misses.append(seed)
            continue
        worst = max(worst, err)
        detected += 1

    false_pos = 0
    for i in range(10):
        scene = generate_scene(4000 + i, SceneParams(rock_count=0))
        cam = camera_pose_for_state(scene, RoverState(), extr)
        depth = render_depth(scene, cam, k, seq=1, stamp_ns=0, noise_sigma=sigma)
        dets, _ = detect_rocks(depth, k, cam, params, seed=(4000 + i, 1))
        false_pos += len(dets)

    recall = detected / qualifying if qualifying else 0.0
    ok = qualifying >= 25 and recall >= 0.95 and false_pos == 0
    return ok, (f"recall {detected}/{qualifying} ({recall:.2f}), worst centroid "
                f"error {worst:.3f} m (tol {tol:.3f}), false positives "
                f"{false_pos}, misses {misses[:4]}")


# --------------------------------------------------------------------------
# tracker: static two-rock sequence + greedy-vs-brute-force assignment


def check_tracker() -> tuple[bool, str]:
    k = default_intrinsics()
    extr = body_to_camera()
    params = DetectorParams()
    scene = Scene(heights=np.zeros((41, 41)), origin=(-5.0, -5.0), cell_size=0.25,
                  rocks=[Rock(1.8, -0.6, 0.2), Rock(1.8, 0.6, 0.18)],
                  sun_direction=[0.0, 0.0, 1.0], seed=77)
    cam = camera_pose_for_state(scene, RoverState(), extr)
    tracker = LandmarkTracker(confirm_hits=3)
    for f in range(1, 21):
        depth = render_depth(scene, cam, k, seq=f, stamp_ns=f,
                             noise_sigma=config.DEPTH_SIGMA_M)
        dets, _ = detect_rocks(depth, k, cam, params, seed=(77, f))
        associate_landmarks(tracker, dets, f, gate=0.3)
    confirmed = tracker.confirmed()
    if len(confirmed) != 2:
        return False, f"expected 2 confirmed landmarks, got {len(confirmed)}"
    worst = 0.0
    for lm in confirmed:
        rock = min(scene.rocks, key=lambda r: np.hypot(lm.position[0] - r.x,
                                                       lm.position[1] - r.y))
        pts, _ = oracle_rock_surface(scene, rock, cam, k, params.stride,
                                     params.h_min)
        ref = _lower_median_point(pts)
        worst = max(worst, float(np.linalg.norm(lm.position - ref)))
    if worst > 0.05:
        return False, f"landmark position error {worst:.3f} m > 0.05"

    # greedy vs brute force on random well-separated 3x3 instances
    rng = np.random.default_rng(424242)
    gate = 0.3
    for _ in range(100):
        while True:
            lm_pos = rng.uniform(-5, 5, size=(3, 2))
            d01 = np.hypot(*(lm_pos[0] - lm_pos[1]))
            d02 = np.hypot(*(lm_pos[0] - lm_pos[2]))
            d12 = np.hypot(*(lm_pos[1] - lm_pos[2]))
            if min(d01, d02, d12) > 2 * gate:
                break
        offsets = rng.uniform(-gate / 3, gate / 3, size=(3, 2))
        det_order = rng.permutation(3)
        tracker = LandmarkTracker()
        for i, p in enumerate(lm_pos):
            tracker.landmarks[i + 1] = RockLandmark(
                id=i + 1, position=np.array([p[0], p[1], 0.1]), radius=0.2,
                hits=1, first_seen=0, last_seen=0)
        tracker.next_id = 4
        dets = [Detection(bbox=(0, 0, 1, 1), pixel_count=10,
                          centroid_world=np.array([
                              lm_pos[j][0] + offsets[j][0],
                              lm_pos[j][1] + offsets[j][1], 0.1]),
                          radius_est=0.2, confidence=1.0, frame_seq=1)
                for j in det_order]
        associate_landmarks(tracker, dets, 1, gate=gate)
        greedy = {}
        for lm_id, lm in tracker.landmarks.items():
            if lm_id <= 3 and lm.hits == 2:
                det_idx = min(range(3), key=lambda j: np.hypot(
                    lm.position[0] - dets[j].centroid_world[0],
                    lm.position[1] - dets[j].centroid_world[1]))
                greedy[lm_id] = det_idx
        brute = _brute_force_assignment(lm_pos, [d.centroid_world[:2] for d in dets], gate)
        if greedy != brute:
            return False, f"greedy {greedy} != brute-force {brute}"
    return True, (f"2 confirmed landmarks, worst position error {worst:.3f} m; "
                  "greedy = brute force on 100 instances")


def _brute_force_assignment(lm_pos, det_pos, gate):
    import itertools
    best = None
    best_key = None
    for perm in itertools.permutations(range(len(det_pos))):
        pairs = {}
        cost = 0.0
        for li, di in enumerate(perm):
            d = float(np.hypot(lm_pos[li][0] - det_pos[di][0],
                               lm_pos[li][1] - det_pos[di][1]))
            if d < gate:
                pairs[li + 1] = di
                cost += d
        key = (-len(pairs), cost)
        if best_key is None or key < best_key:
            best_key = key
            best = pairs
    return best


# --------------------------------------------------------------------------
# codec: round-trip fuzz, corruption fuzz, CRC check value


def _crc32_reference(data: bytes) -> int:
    crc = 0xFFFFFFFF
    for byte in data:
        crc ^= byte
        for _ in range(8):
            crc = (crc >> 1) ^ 0xEDB88320 if crc & 1 else crc >> 1
    return crc ^ 0xFFFFFFFF


def random_message(rng: np.random.Generator, msg_type: MsgType) -> WireMessage:
    seq = int(rng.integers(0, 2 ** 32))
    stamp = int(rng.integers(0, 2 ** 63))
    t = msg_type
    if t == MsgType.HELLO:
        payload = Hello(Role(int(rng.integers(1, 4))), 1)
    elif t == MsgType.SUBSCRIBE:
        payload = Subscribe(int(rng.integers(0, 2 ** 13)))
    elif t == MsgType.RGB_FRAME:
        from .simkit.frames import RgbFrame
        w, h = int(rng.integers(1, 9)), int(rng.integers(1, 7))
        payload = RgbFrame(seq=seq, stamp_ns=stamp, width=w, height=h,
                           data=rng.integers(0, 256, size=(h, w, 3), dtype=np.uint16).astype(np.uint8))
    elif t == MsgType.DEPTH_FRAME:
        from .simkit.frames import DepthFrame
        w, h = int(rng.integers(1, 9)), int(rng.integers(1, 7))
        payload = DepthFrame(seq=seq, stamp_ns=stamp, width=w, height=h,
                             data=rng.integers(0, 65536, size=(h, w), dtype=np.uint32).astype(np.uint16))
    elif t == MsgType.POSE_ESTIMATE:
        payload = Pose(Quat(*rng.normal(size=4)), rng.uniform(-10, 10, size=3))
    elif t == MsgType.DETECTION_SET:
        payload = [Detection(
            bbox=tuple(int(x) for x in np.sort(rng.integers(0, 320, size=4)).tolist()),
            pixel_count=int(rng.integers(1, 10_000)),
            centroid_world=rng.uniform(-10, 10, size=3),
            radius_est=float(rng.uniform(0.05, 0.5)),
            confidence=float(rng.uniform(0, 1)),
            frame_seq=int(rng.integers(0, 2 ** 32)),
        ) for _ in range(int(rng.integers(0, 5)))]
    elif t == MsgType.LANDMARK_SET:
        payload = [RockLandmark(
            id=int(rng.integers(1, 2 ** 31)),
            position=rng.uniform(-10, 10, size=3),
            radius=float(rng.uniform(0.05, 0.5)),
            hits=int(rng.integers(1, 100)),
            first_seen=0, last_seen=0,
            confirmed=bool(rng.integers(0, 2)),
        ) for _ in range(int(rng.integers(0, 5)))]
    elif t == MsgType.POINT_CLOUD_CHUNK:
        payload = PointCloudChunk(rng.uniform(-10, 10, size=(int(rng.integers(0, 50)), 3)))
    elif t == MsgType.MESH_CHUNK:
        nv = int(rng.integers(1, 20))
        nt = int(rng.integers(0, 30))
        payload = SurfaceMesh(vertices=rng.uniform(-10, 10, size=(nv, 3)),
                              triangles=rng.integers(0, nv, size=(nt, 3)),
                              generation=int(rng.integers(0, 1000)))
    elif t == MsgType.TWIST_COMMAND:
        payload = TwistCommand(float(rng.uniform(-1, 1)), float(rng.uniform(-2, 2)),
                               stamp_ns=stamp,
                               source=CommandSource(int(rng.integers(1, 4))))
    elif t == MsgType.SAFETY_STATUS:
        nid = int(rng.integers(0, 5))
        payload = SafetyStatus(state=SafetyState(int(rng.integers(0, 4))),
                               nearest_obstacle_id=None if nid == 0 else nid,
                               clearance=float(rng.uniform(0, 999)),
                               horizon=float(rng.uniform(0.1, 2)))
    elif t == MsgType.HEARTBEAT:
        payload = Heartbeat()
    else:
        payload = MetricsReport(elapsed_s=float(rng.uniform(0, 600)),
                                collision_count=int(rng.integers(0, 10)),
                                min_clearance_m=float(rng.uniform(-1, 999)),
                                distance_m=float(rng.uniform(0, 100)),
                                completed=bool(rng.integers(0, 2)))
    return WireMessage(t, seq, stamp, payload)


def check_codec() -> tuple[bool, str]:
    if crc32(b"123456789") != 0xCBF43926:
        return False, "CRC-32 check value mismatch vs standard"
    if _crc32_reference(b"123456789") != 0xCBF43926:
        return False, "reference CRC implementation broken"
    rng = np.random.default_rng(991)
    probe = [bytes(rng.integers(0, 256, size=int(rng.integers(0, 64)), dtype=np.uint16).astype(np.uint8))
             for _ in range(20)]
    if any(crc32(b) != _crc32_reference(b) for b in probe):
        return False, "zlib CRC disagrees with bitwise reference"

    types = list(MsgType)
    for i in range(1000):
        m = random_message(rng, types[i % len(types)])
        enc = encode_message(m)
        dec = StreamDecoder()
        out = dec.feed(enc)
        if len(out) != 1:
            return False, f"fixture {i}: expected 1 decoded message, got {len(out)}"
        if encode_message(out[0]) != enc:
            return False, f"fixture {i} ({m.msg_type.name}): round-trip bytes differ"

    # corruption fuzz: flips lose only the frames they touch
    for round_i in range(20):
        msgs = [random_message(rng, types[int(rng.integers(0, 13))])
                for _ in range(30)]
        encoded = [encode_message(m) for m in msgs]
        stream = bytearray(b"".join(encoded))
        spans = []
        pos = 0
        for e in encoded:
            spans.append((pos, pos + len(e)))
            pos += len(e)
        flips = rng.integers(0, len(stream) * 8, size=10)
        for f in flips:
            stream[int(f) // 8] ^= 1 << (int(f) % 8)
        touched = {i for i, (a, b) in enumerate(spans)
                   if any(a * 8 <= f < b * 8 for f in flips)}
        dec = StreamDecoder()
        out = dec.feed(bytes(stream))
        out += dec.finish()
        got = {encode_message(m) for m in out}
        for i, e in enumerate(encoded):
            if i not in touched and e not in got:
                return False, (f"corruption round {round_i}: untouched frame {i} "
                               f"({msgs[i].msg_type.name}) lost")
    hb = encode_message(WireMessage(MsgType.HEARTBEAT, 1, 0, Heartbeat()))
    if len(hb) != 24 or hb[0] != 0x52 or hb[1] != 0x56 or hb[-4:] != b"\x00\x00\x00\x00":
        return False, "heartbeat frame layout unexpected"
    return True, ("1000 fixtures round-trip, 20 corruption rounds lose only "
                  "touched frames, CRC check value 0xCBF43926")


# --------------------------------------------------------------------------
# determinism: repeated scenario runs and record->replay byte identity


def _arc_scenario(seed: int, duration: float = 6.0) -> Scenario:
    return Scenario(scene_seed=seed, duration_s=duration, mode="3d",
                    safety_on=True,
                    commands=[TimedCommand(0.0, 0.25, 0.0),
                              TimedCommand(2.0, 0.25, 0.3),
                              TimedCommand(4.0, 0.2, -0.3)])


def _landmark_bytes(log_path: Path) -> list[bytes]:
    msgs, _ = read_log(log_path)
    return [encode_message(m) for m in msgs if m.msg_type == MsgType.LANDMARK_SET]


def check_determinism() -> tuple[bool, str]:
    scn = _arc_scenario(seed=11)
    with tempfile.TemporaryDirectory() as td:
        td = Path(td)
        outs = []
        for run in ("a", "b"):
            res = run_scenario(scn, record_path=td / f"rec_{run}.log",
                               pub_log_path=td / f"pub_{run}.log",
                               truth_log_path=td / f"truth_{run}.txt")
            outs.append(res.metrics_json())
        if outs[0] != outs[1]:
            return False, "metrics JSON differs between identical runs"
        if (td / "truth_a.txt").read_bytes() != (td / "truth_b.txt").read_bytes():
            return False, "truth logs differ between identical runs"
        if (td / "pub_a.log").read_bytes() != (td / "pub_b.log").read_bytes():
            return False, "publication logs differ between identical runs"

        cfg = pipeline_config_for(scn.scene_seed, scn.safety_on)
        replay_through_pipeline(td / "rec_a.log", cfg, td / "rp1.log")
        cfg = pipeline_config_for(scn.scene_seed, scn.safety_on)
        replay_through_pipeline(td / "rec_a.log", cfg, td / "rp2.log")
        if (td / "rp1.log").read_bytes() != (td / "rp2.log").read_bytes():
            return False, "replay publications differ between identical replays"
        live = _landmark_bytes(td / "pub_a.log")
        rep = _landmark_bytes(td / "rp1.log")
        if live != rep:
            return False, (f"landmark publications differ live vs replay "
                           f"({len(live)} vs {len(rep)})")
        n = len(live)
    return True, f"2 runs byte-identical; replay reproduces {n} landmark publications"


# --------------------------------------------------------------------------
# safety end-to-end: head-on block, and watchdog stop


def _head_on_scene(path: Path) -> None:
    scene = Scene(heights=np.zeros((41, 41)), origin=(-5.0, -5.0), cell_size=0.25,
                  rocks=[Rock(2.0, 0.0, 0.2)], sun_direction=[0.0, 0.0, 1.0],
                  seed=5150)
    save_scene(scene, path)


def _empty_scene(path: Path) -> None:
    scene = Scene(heights=np.zeros((41, 41)), origin=(-5.0, -5.0), cell_size=0.25,
                  rocks=[], sun_direction=[0.0, 0.0, 1.0], seed=5151)
    save_scene(scene, path)


def check_safety() -> tuple[bool, str]:
    with tempfile.TemporaryDirectory() as td:
        td = Path(td)
        _head_on_scene(td / "head_on.json")
        base = dict(scene_seed=5150, duration_s=10.0, mode="2d",
                    scene_file=str(td / "head_on.json"),
                    commands=[TimedCommand(0.0, 0.4, 0.0)])
        off = run_scenario(Scenario(safety_on=False, **base))
        if off.metrics["collisions"] < 1:
            return False, f"safety-off run should collide, metrics={off.metrics}"
        on = run_scenario(Scenario(safety_on=True, **base))
        if on.metrics["collisions"] != 0:
            return False, f"safety-on run collided: {on.metrics}"
        if on.blocked_events < 1:
            return False, "safety-on run never reported a blocked status"

        _empty_scene(td / "empty.json")
        wd = Scenario(scene_seed=5151, duration_s=4.0, mode="2d", safety_on=True,
                      scene_file=str(td / "empty.json"),
                      commands=[TimedCommand(0.0, 0.4, 0.0),
                                TimedCommand(2.0, None, None)])
        res = run_scenario(wd, truth_log_path=td / "truth.txt")
        if res.watchdog_stops < 1:
            return False, "watchdog never fired"
        bad = []
        for line in (td / "truth.txt").read_text().splitlines()[1:]:
            fields = dict(f.split("=") for f in line.split())
            if float(fields["t"]) >= 2.6 and abs(float(fields["v"])) > 1e-12:
                bad.append(line)
        if bad:
            return False, f"rover still moving after watchdog: {bad[0]}"
    return True, (f"off: {off.metrics['collisions']} collisions; on: 0 collisions, "
                  f"{on.blocked_events} blocked statuses; watchdog stopped rover "
                  f"by t=2.6s ({res.watchdog_stops} stops)")


# --------------------------------------------------------------------------
# throughput: 60 s scenario processes faster than real time


def check_throughput() -> tuple[bool, str]:
    scn = Scenario(scene_seed=21, duration_s=60.0, mode="3d", safety_on=True,
                   commands=[TimedCommand(0.0, 0.3, 0.05),
                             TimedCommand(20.0, 0.3, -0.1),
                             TimedCommand(40.0, 0.25, 0.1)])
    t0 = time.perf_counter()
    res = run_scenario(scn)
    wall = time.perf_counter() - t0
    mean = res.mean_frame_latency_s or 0.0
    ok = mean < 0.200 and res.frames >= 290
    return ok, (f"{res.frames} frames, mean pipeline latency "
                f"{mean * 1e3:.0f} ms (limit 200), wall {wall:.0f}s for "
                f"{res.metrics['duration_s']:.0f}s scenario")


# --------------------------------------------------------------------------

CHECKS = {
    "geometry": check_geometry,
    "plane_fit": check_plane_fit,
    "detection": check_detection_oracle,
    "tracker": check_tracker,
    "codec": check_codec,
    "determinism": check_determinism,
    "safety": check_safety,
    "throughput": check_throughput,
}


def run_selftest(names: list[str] | None = None) -> list[CheckResult]:
    results = []
    for name, fn in CHECKS.items():
        if names and name not in names:
            continue
        t0 = time.perf_counter()
        try:
            passed, detail = fn()
        except Exception as e:  # a crashed check is a failed check
            passed, detail = False, f"raised {type(e).__name__}: {e}"
        results.append(CheckResult(name, passed, detail,
                                   time.perf_counter() - t0))
    return results
