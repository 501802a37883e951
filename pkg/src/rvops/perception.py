"""Per-frame rock detection: depth back-projection, RANSAC ground plane,
above-plane segmentation, connected components, and 3D localization.

The detector is deterministic: identical (frame, pose, params, seed) inputs
produce identical detection lists. Medians use the lower-middle element so
results reproduce exactly across numeric environments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import config
from .geometry import CameraIntrinsics, Pose, rotation_matrix
from .simkit.frames import DepthFrame


class PlaneFitError(ValueError):
    """No usable ground plane (too few points or too few inliers)."""


@dataclass(frozen=True)
class Plane:
    """Ground plane n.p + d = 0 with n unit-norm and n.z > 0."""

    normal: np.ndarray
    d: float
    inlier_count: int

    def __post_init__(self) -> None:
        n = np.asarray(self.normal, dtype=np.float64).reshape(3)
        object.__setattr__(self, "normal", n)
        if abs(np.linalg.norm(n) - 1.0) > 1e-6:
            raise ValueError("plane normal must be unit length")

    def height(self, points: np.ndarray) -> np.ndarray:
        """Signed height of points above the plane."""
        return np.asarray(points) @ self.normal + self.d


@dataclass(eq=False)
class Detection:
    bbox: tuple[int, int, int, int]   # u_min, v_min, u_max, v_max (pixels)
    pixel_count: int                  # stride-grid pixels in the component
    centroid_world: np.ndarray
    radius_est: float
    confidence: float
    frame_seq: int

    def __post_init__(self) -> None:
        self.centroid_world = np.asarray(self.centroid_world, dtype=np.float64).reshape(3)
        if self.radius_est <= 0:
            raise ValueError("radius estimate must be positive")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must be in [0, 1]")


@dataclass(frozen=True)
class DetectorParams:
    ransac_iters: int = 200
    inlier_tau: float = 0.02          # meters
    min_inlier_frac: float = 0.3
    h_min: float = 0.05               # above-plane threshold, meters
    stride: int = 2
    connectivity: int = 8
    min_component_px: int = 30        # full-resolution pixel equivalent
    confidence_ref_px: int = 300
    radius_floor: float = 0.05

    def __post_init__(self) -> None:
        if self.connectivity not in (4, 8):
            raise ValueError("connectivity must be 4 or 8")
        for name in ("ransac_iters", "inlier_tau", "min_inlier_frac", "h_min",
                     "stride", "min_component_px", "confidence_ref_px"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def _rng_key(seed) -> np.ndarray:
    """Philox key from an int seed or a (seed, counter) pair."""
    if isinstance(seed, tuple):
        hi, lo = seed
    else:
        hi, lo = seed, 0
    return np.array([hi & 0xFFFFFFFFFFFFFFFF,
                     (config.STREAM_RANSAC << 48) | (lo & 0xFFFFFFFFFFFF)],
                    dtype=np.uint64)


def frame_to_points(depth: DepthFrame, k: CameraIntrinsics, cam_pose_world: Pose,
                    stride: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Back-project valid stride-grid depth pixels into world points.

    Returns (pixels (N,2) int array of [u, v], points (N,3) world meters).
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    d = depth.data[::stride, ::stride]
    vs, us = np.nonzero(d)
    z = d[vs, us].astype(np.float64) * k.depth_scale
    u = us.astype(np.int64) * stride
    v = vs.astype(np.int64) * stride
    x = (u - k.cx) * z / k.fx
    y = (v - k.cy) * z / k.fy
    p_cam = np.stack([x, y, z], axis=-1)
    rot = rotation_matrix(cam_pose_world.rotation)
    pts = p_cam @ rot.T + cam_pose_world.translation
    return np.stack([u, v], axis=-1), pts


def fit_ground_plane_ransac(points: np.ndarray, p: DetectorParams,
                            seed) -> Plane:
    """RANSAC plane fit refined by an inlier covariance eigensolve.

    Candidate with the most inliers wins (first found on ties); the refined
    normal is flipped so its z component is positive.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    n_pts = len(pts)
    if n_pts < 3:
        raise PlaneFitError(f"need at least 3 points, got {n_pts}")

    rng = np.random.Generator(np.random.Philox(key=_rng_key(seed)))
    idx = rng.integers(0, n_pts, size=(p.ransac_iters, 3))
    distinct = ((idx[:, 0] != idx[:, 1]) & (idx[:, 0] != idx[:, 2])
                & (idx[:, 1] != idx[:, 2]))
    tri = pts[idx]
    normals = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    norms = np.linalg.norm(normals, axis=1)
    valid = distinct & (norms > config.TOL.collinear_cross)
    counts = np.full(p.ransac_iters, -1, dtype=np.int64)
    if valid.any():
        nrm = normals[valid] / norms[valid, None]
        dd = -np.einsum("ij,ij->i", nrm, tri[valid, 0])
        dist = np.abs(pts @ nrm.T + dd)
        counts[valid] = (dist < p.inlier_tau).sum(axis=0)
    best = int(np.argmax(counts))
    if counts[best] < max(3, p.min_inlier_frac * n_pts):
        raise PlaneFitError(
            f"best candidate has {counts[best]}/{n_pts} inliers "
            f"(need {p.min_inlier_frac:.0%})")

    bn = normals[best] / norms[best]
    bd = -float(bn @ tri[best, 0])
    inl = pts[np.abs(pts @ bn + bd) < p.inlier_tau]

    centroid = inl.mean(axis=0)
    cov = (inl - centroid).T @ (inl - centroid)
    _, vecs = np.linalg.eigh(cov)
    normal = vecs[:, 0]
    if normal[2] < 0:
        normal = -normal
    if normal[2] <= 1e-12:
        raise PlaneFitError("fitted plane is vertical, not ground-like")
    d = -float(normal @ centroid)
    count = int((np.abs(pts @ normal + d) < p.inlier_tau).sum())
    return Plane(normal=normal, d=d, inlier_count=count)


def above_plane_mask(points: np.ndarray, plane: Plane,
                     h_min: float) -> np.ndarray:
    """Boolean mask of points strictly higher than h_min above the plane."""
    return plane.height(points) > h_min


def connected_components(mask: np.ndarray, connectivity: int = 8,
                         ) -> list[np.ndarray]:
    """Connected components of a 2D boolean grid as (N, 2) arrays of
    (row, col), ordered by (min row, then min col) per component."""
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    structure = np.ones((3, 3), dtype=bool) if connectivity == 8 else None
    labels, n = ndimage.label(mask, structure=structure)
    comps = []
    for lbl in range(1, n + 1):
        rows, cols = np.nonzero(labels == lbl)
        comps.append(np.stack([rows, cols], axis=-1))
    comps.sort(key=lambda c: (int(c[:, 0].min()), int(c[:, 1].min())))
    return comps


def _lower_median(values: np.ndarray) -> float:
    """Lower-middle element: exact and environment-independent."""
    s = np.sort(values)
    return float(s[(len(s) - 1) // 2])


def detect_rocks(depth: DepthFrame, k: CameraIntrinsics, cam_pose_world: Pose,
                 p: DetectorParams | None = None, seed=0,
                 points: tuple[np.ndarray, np.ndarray] | None = None,
                 ) -> tuple[list[Detection], Plane | None]:
    """Full per-frame detector. Returns (detections, plane); plane is None
    when no ground is visible, in which case the detection list is empty.

    `points` may carry a precomputed frame_to_points result for this exact
    (frame, pose, stride) to avoid recomputing it.
    """
    p = p or DetectorParams()
    pixels, pts = points if points is not None else frame_to_points(
        depth, k, cam_pose_world, p.stride)
    try:
        plane = fit_ground_plane_ransac(pts, p, seed)
    except PlaneFitError:
        return [], None

    above = above_plane_mask(pts, plane, p.h_min)
    gw = (k.width + p.stride - 1) // p.stride
    gh = (k.height + p.stride - 1) // p.stride
    grid = np.zeros((gh, gw), dtype=bool)
    index_grid = np.full((gh, gw), -1, dtype=np.int64)
    gu = pixels[:, 0] // p.stride
    gv = pixels[:, 1] // p.stride
    grid[gv[above], gu[above]] = True
    index_grid[gv, gu] = np.arange(len(pts))

    detections = []
    for comp in connected_components(grid, p.connectivity):
        count = len(comp)
        if count * p.stride * p.stride < p.min_component_px:
            continue
        members = index_grid[comp[:, 0], comp[:, 1]]
        mp = pts[members]
        mpx = pixels[members]
        centroid = np.array([_lower_median(mp[:, 0]),
                             _lower_median(mp[:, 1]),
                             _lower_median(mp[:, 2])])
        extent = max(float(mp[:, 0].max() - mp[:, 0].min()),
                     float(mp[:, 1].max() - mp[:, 1].min()))
        detections.append(Detection(
            bbox=(int(mpx[:, 0].min()), int(mpx[:, 1].min()),
                  int(mpx[:, 0].max()), int(mpx[:, 1].max())),
            pixel_count=count,
            centroid_world=centroid,
            radius_est=max(p.radius_floor, 0.5 * extent),
            confidence=min(1.0, count * p.stride * p.stride / p.confidence_ref_px),
            frame_seq=depth.seq,
        ))
    detections.sort(key=lambda d: -d.pixel_count)
    return detections, plane
