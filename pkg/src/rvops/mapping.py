"""World-model accumulation: voxel statistics, the operator heightmap mesh,
and fusion of per-frame detections into persistent rock landmarks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .perception import Detection


@dataclass
class VoxelGrid:
    """Sparse accumulation grid; each cell stores (coordinate sum, count)."""

    voxel_size: float = 0.05
    cells: dict[tuple[int, int, int], tuple[np.ndarray, int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.voxel_size <= 0:
            raise ValueError("voxel size must be positive")


def voxel_insert(g: VoxelGrid, points: np.ndarray) -> VoxelGrid:
    """Accumulate points into their cells (key = floor(coord / size))."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        return g
    keys = np.floor(pts / g.voxel_size).astype(np.int64)
    order, inverse = np.unique(keys, axis=0, return_inverse=True)
    sums = np.zeros((len(order), 3))
    np.add.at(sums, inverse, pts)
    counts = np.bincount(inverse, minlength=len(order))
    for i, key in enumerate(map(tuple, order)):
        prev = g.cells.get(key)
        if prev is None:
            g.cells[key] = (sums[i].copy(), int(counts[i]))
        else:
            g.cells[key] = (prev[0] + sums[i], prev[1] + int(counts[i]))
    return g


def voxel_centroids(g: VoxelGrid) -> np.ndarray:
    """(N, 3) cell centroids ordered by lexicographic cell key."""
    if not g.cells:
        return np.zeros((0, 3))
    keys = sorted(g.cells.keys())
    return np.array([g.cells[k][0] / g.cells[k][1] for k in keys])


@dataclass(eq=False)
class SurfaceMesh:
    """Triangulated heightmap for the 3D operator view, CCW seen from +z."""

    vertices: np.ndarray    # (N, 3)
    triangles: np.ndarray   # (M, 3) indices
    generation: int = 0

    def __post_init__(self) -> None:
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if len(self.triangles) and self.triangles.max() >= len(self.vertices):
            raise ValueError("triangle index out of range")


def build_heightmap_mesh(g: VoxelGrid, roi: tuple[tuple[float, float], tuple[float, float]],
                         cell: float = 0.10, generation: int = 0) -> SurfaceMesh:
    """Regular-lattice mesh over the ROI from voxel centroids.

    A vertex gets the max centroid z in its surrounding cell-sized bin (the
    conservative choice: obstacles are never under-drawn); cells emit two
    CCW triangles only when all four corners are present.
    """
    if cell <= 0:
        raise ValueError("mesh cell must be positive")
    (x0, y0), (x1, y1) = roi
    if x1 <= x0 or y1 <= y0:
        raise ValueError("roi must be non-empty")
    nx = int(np.floor((x1 - x0) / cell + 1e-9))
    ny = int(np.floor((y1 - y0) / cell + 1e-9))

    pts = voxel_centroids(g)
    height = np.full((ny + 1, nx + 1), -np.inf)
    if len(pts):
        i = np.floor((pts[:, 0] - x0) / cell + 0.5).astype(np.int64)
        j = np.floor((pts[:, 1] - y0) / cell + 0.5).astype(np.int64)
        ok = (i >= 0) & (i <= nx) & (j >= 0) & (j <= ny)
        np.maximum.at(height, (j[ok], i[ok]), pts[ok, 2])
    present = np.isfinite(height)

    vid = np.full((ny + 1, nx + 1), -1, dtype=np.int64)
    verts = []
    for j in range(ny + 1):
        for i in range(nx + 1):
            if present[j, i]:
                vid[j, i] = len(verts)
                verts.append((x0 + i * cell, y0 + j * cell, height[j, i]))
    tris = []
    for j in range(ny):
        for i in range(nx):
            v00, v10 = vid[j, i], vid[j, i + 1]
            v01, v11 = vid[j + 1, i], vid[j + 1, i + 1]
            if v00 >= 0 and v10 >= 0 and v01 >= 0 and v11 >= 0:
                tris.append((v00, v10, v11))
                tris.append((v00, v11, v01))
    return SurfaceMesh(vertices=np.array(verts).reshape(-1, 3),
                       triangles=np.array(tris, dtype=np.int64).reshape(-1, 3),
                       generation=generation)


@dataclass(eq=False)
class RockLandmark:
    """Persistent fused obstacle; position and radius are running means."""

    id: int
    position: np.ndarray
    radius: float
    hits: int
    first_seen: int
    last_seen: int
    confirmed: bool = False

    def __post_init__(self) -> None:
        self.position = np.asarray(self.position, dtype=np.float64).reshape(3)
        if self.hits < 1:
            raise ValueError("hits must be >= 1")
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    def snapshot(self) -> "RockLandmark":
        """Immutable-by-copy view safe to hand to the network layer."""
        return RockLandmark(id=self.id, position=self.position.copy(),
                            radius=self.radius, hits=self.hits,
                            first_seen=self.first_seen, last_seen=self.last_seen,
                            confirmed=self.confirmed)


@dataclass
class LandmarkTracker:
    landmarks: dict[int, RockLandmark] = field(default_factory=dict)
    next_id: int = 1
    confirm_hits: int = 3

    def confirmed(self) -> list[RockLandmark]:
        return [lm for lm in self.landmarks.values() if lm.confirmed]


def associate_landmarks(tracker: LandmarkTracker, detections: list[Detection],
                        frame_seq: int, gate: float = 0.3) -> LandmarkTracker:
    """Greedy gated nearest-neighbor association; landmarks are never deleted.

    Pairs are taken by ascending (horizontal distance, landmark id, detection
    index); a pair matches only strictly inside the gate. Unmatched
    detections become new landmarks with dense ids from 1.
    """
    if gate <= 0:
        raise ValueError("gate must be positive")
    pairs = []
    for lm in tracker.landmarks.values():
        for di, det in enumerate(detections):
            d = float(np.hypot(lm.position[0] - det.centroid_world[0],
                               lm.position[1] - det.centroid_world[1]))
            if d < gate:
                pairs.append((d, lm.id, di))
    pairs.sort()
    matched_lm: set[int] = set()
    matched_det: set[int] = set()
    for d, lm_id, di in pairs:
        if lm_id in matched_lm or di in matched_det:
            continue
        matched_lm.add(lm_id)
        matched_det.add(di)
        lm = tracker.landmarks[lm_id]
        det = detections[di]
        lm.position = (lm.hits * lm.position + det.centroid_world) / (lm.hits + 1)
        lm.radius = (lm.hits * lm.radius + det.radius_est) / (lm.hits + 1)
        lm.hits += 1
        lm.last_seen = frame_seq
    for di, det in enumerate(detections):
        if di in matched_det:
            continue
        lm = RockLandmark(id=tracker.next_id, position=det.centroid_world.copy(),
                          radius=det.radius_est, hits=1,
                          first_seen=frame_seq, last_seen=frame_seq)
        tracker.landmarks[lm.id] = lm
        tracker.next_id += 1
    for lm in tracker.landmarks.values():
        lm.confirmed = lm.hits >= tracker.confirm_hits
    return tracker
