"""Synthetic RGBD rendering: analytic sphere hits + marched terrain hits.

Rendering is a pure function of (scene, pose, intrinsics, seed): repeated
calls produce byte-identical frames. Depth noise is drawn from a
counter-based generator keyed by (scene seed, frame seq).
"""

from __future__ import annotations

import math
import warnings

import numpy as np

# Old TBB versions make numba warn and fall back to another threading layer;
# the fallback is fine and the warning would pollute CLI output.
warnings.filterwarnings("ignore", message=".*TBB.*")

from numba import njit, prange

from .. import config
from ..geometry import CameraIntrinsics, Pose, rotation_matrix
from .frames import DepthFrame, RgbFrame
from .rover import RoverState
from .scene import Scene, rock_center_z, terrain_height


@njit(cache=True, inline="always")
def _terrain_at(heights, hx0, hy0, hcell, x, y):
    ny, nx = heights.shape
    gx = (x - hx0) / hcell
    gy = (y - hy0) / hcell
    if gx < 0.0:
        gx = 0.0
    elif gx > nx - 1.0:
        gx = nx - 1.0
    if gy < 0.0:
        gy = 0.0
    elif gy > ny - 1.0:
        gy = ny - 1.0
    ix = int(gx)
    iy = int(gy)
    if ix > nx - 2:
        ix = nx - 2
    if iy > ny - 2:
        iy = ny - 2
    if ix < 0:
        ix = 0
    if iy < 0:
        iy = 0
    fx = gx - ix
    fy = gy - iy
    ix1 = ix + 1 if ix + 1 < nx else ix
    iy1 = iy + 1 if iy + 1 < ny else iy
    return (heights[iy, ix] * (1.0 - fx) * (1.0 - fy)
            + heights[iy, ix1] * fx * (1.0 - fy)
            + heights[iy1, ix] * (1.0 - fx) * fy
            + heights[iy1, ix1] * fx * fy)


@njit(cache=True, parallel=True)
def _raycast_kernel(ox, oy, oz, rot,
                    fx, fy, cx, cy, width, height,
                    heights, hx0, hy0, hcell, hmin, hmax,
                    rocks, step, max_range, bisect_iters,
                    out_s, out_kind, out_rock):
    pad = 1e-6
    kmax = int(math.ceil(max_range / step))
    for v in prange(height):
        for u in range(width):
            dxc = (u - cx) / fx
            dyc = (v - cy) / fy
            wx = rot[0, 0] * dxc + rot[0, 1] * dyc + rot[0, 2]
            wy = rot[1, 0] * dxc + rot[1, 1] * dyc + rot[1, 2]
            wz = rot[2, 0] * dxc + rot[2, 1] * dyc + rot[2, 2]
            n = math.sqrt(wx * wx + wy * wy + wz * wz)
            wx /= n
            wy /= n
            wz /= n

            # Spheres: nearest positive root whose hit lies above local terrain.
            s_rock = np.inf
            rock_id = -1
            for i in range(rocks.shape[0]):
                ocx = ox - rocks[i, 0]
                ocy = oy - rocks[i, 1]
                ocz = oz - rocks[i, 2]
                b = ocx * wx + ocy * wy + ocz * wz
                c = ocx * ocx + ocy * ocy + ocz * ocz - rocks[i, 3] * rocks[i, 3]
                disc = b * b - c
                if disc < 0.0:
                    continue
                sq = math.sqrt(disc)
                s_hit = -1.0
                s1 = -b - sq
                if 1e-9 < s1 <= max_range:
                    pz = oz + s1 * wz
                    if pz + 1e-9 >= _terrain_at(heights, hx0, hy0, hcell,
                                                ox + s1 * wx, oy + s1 * wy):
                        s_hit = s1
                if s_hit < 0.0:
                    s2 = -b + sq
                    if 1e-9 < s2 <= max_range:
                        pz = oz + s2 * wz
                        if pz + 1e-9 >= _terrain_at(heights, hx0, hy0, hcell,
                                                    ox + s2 * wx, oy + s2 * wy):
                            s_hit = s2
                if 0.0 < s_hit < s_rock:
                    s_rock = s_hit
                    rock_id = i

            # Terrain: fixed-step march restricted to the height band the ray
            # can cross, then bisection refinement. Steps stay on the global
            # k*step grid so the clipped march matches a march from zero.
            s_ter = np.inf
            march = True
            s_lo = 0.0
            s_hi = max_range
            if wz >= 0.0:
                if oz > hmax + pad:
                    march = False
                elif wz > 1e-12:
                    s_hi = min(max_range, (hmax + pad - oz) / wz)
            else:
                if oz > hmax + pad:
                    s_lo = (hmax + pad - oz) / wz
                s_hi = min(max_range, (hmin - pad - oz) / wz)
            if march and s_lo <= max_range:
                k0 = int(math.floor(s_lo / step))
                if k0 < 0:
                    k0 = 0
                k1 = int(math.ceil(s_hi / step)) + 1
                if k1 > kmax:
                    k1 = kmax
                s_prev = k0 * step
                f_prev = (oz + s_prev * wz) - _terrain_at(
                    heights, hx0, hy0, hcell, ox + s_prev * wx, oy + s_prev * wy)
                if f_prev <= 0.0:
                    s_ter = s_prev
                else:
                    for k in range(k0 + 1, k1 + 1):
                        s = k * step
                        f = (oz + s * wz) - _terrain_at(
                            heights, hx0, hy0, hcell, ox + s * wx, oy + s * wy)
                        if f <= 0.0:
                            lo = s_prev
                            hi = s
                            for _ in range(bisect_iters):
                                mid = 0.5 * (lo + hi)
                                fm = (oz + mid * wz) - _terrain_at(
                                    heights, hx0, hy0, hcell,
                                    ox + mid * wx, oy + mid * wy)
                                if fm <= 0.0:
                                    hi = mid
                                else:
                                    lo = mid
                            s_ter = 0.5 * (lo + hi)
                            break
                        s_prev = s
                        f_prev = f
                if s_ter > max_range:
                    s_ter = np.inf

            if s_rock < s_ter:
                out_s[v, u] = s_rock
                out_kind[v, u] = 2
                out_rock[v, u] = rock_id
            elif s_ter < np.inf:
                out_s[v, u] = s_ter
                out_kind[v, u] = 1
                out_rock[v, u] = -1
            else:
                out_s[v, u] = np.inf
                out_kind[v, u] = 0
                out_rock[v, u] = -1


def _rock_array(scene: Scene) -> np.ndarray:
    rocks = np.zeros((len(scene.rocks), 4))
    for i, r in enumerate(scene.rocks):
        rocks[i] = (r.x, r.y, rock_center_z(scene, r), r.radius)
    return rocks


def raycast(scene: Scene, cam_pose_world: Pose, k: CameraIntrinsics,
            ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-pixel (ray distance, hit kind, rock index); kind 0=sky 1=terrain 2=rock."""
    heights = np.ascontiguousarray(scene.heights, dtype=np.float64)
    rot = np.ascontiguousarray(rotation_matrix(cam_pose_world.rotation))
    t = cam_pose_world.translation
    out_s = np.empty((k.height, k.width))
    out_kind = np.empty((k.height, k.width), dtype=np.uint8)
    out_rock = np.empty((k.height, k.width), dtype=np.int32)
    _raycast_kernel(float(t[0]), float(t[1]), float(t[2]), rot,
                    k.fx, k.fy, k.cx, k.cy, k.width, k.height,
                    heights, scene.origin[0], scene.origin[1], scene.cell_size,
                    float(heights.min()), float(heights.max()),
                    _rock_array(scene),
                    config.DEPTH_MARCH_STEP_M, config.DEPTH_MAX_RANGE_M,
                    config.DEPTH_BISECT_ITERS,
                    out_s, out_kind, out_rock)
    return out_s, out_kind, out_rock


def _ray_dirs(k: CameraIntrinsics, cam_pose_world: Pose,
              ) -> tuple[np.ndarray, np.ndarray]:
    """Unit world-frame ray directions and the camera-z component of unit
    camera-frame directions (converts ray distance to depth)."""
    us = np.arange(k.width, dtype=np.float64)
    vs = np.arange(k.height, dtype=np.float64)
    dxc = (us[None, :] - k.cx) / k.fx * np.ones((k.height, 1))
    dyc = (vs[:, None] - k.cy) / k.fy * np.ones((1, k.width))
    norm = np.sqrt(dxc * dxc + dyc * dyc + 1.0)
    d_cam = np.stack([dxc, dyc, np.ones_like(dxc)], axis=-1) / norm[..., None]
    rot = rotation_matrix(cam_pose_world.rotation)
    d_world = d_cam @ rot.T
    return d_world, 1.0 / norm


def _depth_from_cast(scene: Scene, k: CameraIntrinsics, seq: int, stamp_ns: int,
                     noise_sigma: float, s: np.ndarray, kind: np.ndarray,
                     z_factor: np.ndarray) -> DepthFrame:
    valid = kind > 0
    depth = np.where(valid, s * z_factor, 0.0)
    if noise_sigma > 0:
        key = np.array([scene.seed & 0xFFFFFFFFFFFFFFFF,
                        (config.STREAM_DEPTH_NOISE << 48) | (seq & 0xFFFFFFFFFFFF)],
                       dtype=np.uint64)
        rng = np.random.Generator(np.random.Philox(key=key))
        depth = np.where(valid, depth + rng.normal(0.0, noise_sigma, size=depth.shape), 0.0)
    depth = np.clip(depth, 0.0, config.DEPTH_MAX_RANGE_M)
    units = np.clip(np.rint(depth / k.depth_scale), 0, 65535).astype(np.uint16)
    return DepthFrame(seq=seq, stamp_ns=stamp_ns, width=k.width, height=k.height,
                      data=units)


def _rgb_from_cast(scene: Scene, cam_pose_world: Pose, k: CameraIntrinsics,
                   seq: int, stamp_ns: int, s: np.ndarray, kind: np.ndarray,
                   rock_id: np.ndarray, d_world: np.ndarray) -> RgbFrame:
    origin = cam_pose_world.translation
    shade = np.zeros((k.height, k.width))
    sun = scene.sun_direction
    finite_s = np.where(np.isfinite(s), s, 0.0)
    pts = origin + finite_s[..., None] * d_world

    ter = kind == 1
    if ter.any():
        eps = scene.cell_size / 2.0
        x = pts[..., 0][ter]
        y = pts[..., 1][ter]
        dhx = (terrain_height(scene, x + eps, y) - terrain_height(scene, x - eps, y)) / (2 * eps)
        dhy = (terrain_height(scene, x, y + eps) - terrain_height(scene, x, y - eps)) / (2 * eps)
        n = np.stack([-dhx, -dhy, np.ones_like(dhx)], axis=-1)
        n /= np.linalg.norm(n, axis=-1, keepdims=True)
        shade[ter] = config.TERRAIN_ALBEDO * np.maximum(0.0, n @ sun)

    rk = kind == 2
    if rk.any():
        rocks = _rock_array(scene)
        centers = rocks[rock_id[rk], :3]
        radii = rocks[rock_id[rk], 3]
        n = (pts[rk] - centers) / radii[:, None]
        n /= np.linalg.norm(n, axis=-1, keepdims=True)
        shade[rk] = config.ROCK_ALBEDO * np.maximum(0.0, n @ sun)

    gray = np.rint(np.clip(shade, 0.0, 1.0) * 255.0).astype(np.uint8)
    rgb = np.repeat(gray[..., None], 3, axis=-1)
    return RgbFrame(seq=seq, stamp_ns=stamp_ns, width=k.width, height=k.height,
                    data=rgb)


def render_depth(scene: Scene, cam_pose_world: Pose, k: CameraIntrinsics,
                 seq: int = 0, stamp_ns: int = 0,
                 noise_sigma: float = config.DEPTH_SIGMA_M) -> DepthFrame:
    """Depth frame: camera-frame z of the nearest surface per pixel, quantized."""
    s, kind, _ = raycast(scene, cam_pose_world, k)
    _, z_factor = _ray_dirs(k, cam_pose_world)
    return _depth_from_cast(scene, k, seq, stamp_ns, noise_sigma, s, kind, z_factor)


def render_rgb(scene: Scene, cam_pose_world: Pose, k: CameraIntrinsics,
               seq: int = 0, stamp_ns: int = 0) -> RgbFrame:
    """Grayscale Lambert-shaded frame replicated to RGB; sky is black."""
    s, kind, rock_id = raycast(scene, cam_pose_world, k)
    d_world, _ = _ray_dirs(k, cam_pose_world)
    return _rgb_from_cast(scene, cam_pose_world, k, seq, stamp_ns, s, kind,
                          rock_id, d_world)


def render_rgbd(scene: Scene, cam_pose_world: Pose, k: CameraIntrinsics,
                seq: int = 0, stamp_ns: int = 0,
                noise_sigma: float = config.DEPTH_SIGMA_M,
                ) -> tuple[RgbFrame, DepthFrame]:
    """Both frames from a single raycast (what the simulated rover emits)."""
    s, kind, rock_id = raycast(scene, cam_pose_world, k)
    d_world, z_factor = _ray_dirs(k, cam_pose_world)
    rgb = _rgb_from_cast(scene, cam_pose_world, k, seq, stamp_ns, s, kind,
                         rock_id, d_world)
    depth = _depth_from_cast(scene, k, seq, stamp_ns, noise_sigma, s, kind, z_factor)
    return rgb, depth


def camera_pose_for_state(scene: Scene, st: RoverState, extrinsic: Pose) -> Pose:
    """World pose of the camera for a rover state; body z follows the terrain."""
    from ..geometry import pose_compose
    body = Pose.from_xytheta(st.x, st.y, st.theta,
                             z=terrain_height(scene, st.x, st.y))
    return pose_compose(body, extrinsic)
