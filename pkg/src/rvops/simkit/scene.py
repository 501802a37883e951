"""Procedural test arena: bumpy terrain heightmap plus hemispherical rocks."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import config

DEFAULT_SUN = np.array([0.3, -0.2, 0.92]) / np.linalg.norm([0.3, -0.2, 0.92])


class ScenePlacementError(RuntimeError):
    """Rock rejection sampling exhausted its attempt budget."""


@dataclass(frozen=True)
class Rock:
    """Hemisphere resting on the terrain, horizontal center (x, y), meters."""

    x: float
    y: float
    radius: float

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError("rock radius must be positive")


@dataclass(frozen=True)
class SceneParams:
    arena_size: float = 10.0
    rock_count: int = 12
    radius_min: float = 0.1
    radius_max: float = 0.35
    roughness: float = 0.05       # bump amplitude, meters
    cell_size: float = 0.25
    bump_count: int = 6
    start_clearance: float = 1.0  # rocks keep this far from the start (0, 0)
    rock_spacing: float = 0.5     # center-to-center
    max_attempts: int = 10_000


@dataclass
class Scene:
    heights: np.ndarray           # (ny, nx) grid, meters
    origin: tuple[float, float]   # world (x, y) of grid node [0, 0]
    cell_size: float
    rocks: list[Rock]
    sun_direction: np.ndarray
    seed: int

    def __post_init__(self) -> None:
        self.heights = np.asarray(self.heights, dtype=np.float64)
        if self.heights.ndim != 2:
            raise ValueError("heightmap must be a 2D grid")
        if not np.isfinite(self.heights).all():
            raise ValueError("heightmap must be finite everywhere")
        if self.cell_size <= 0:
            raise ValueError("cell size must be positive")
        self.sun_direction = np.asarray(self.sun_direction, dtype=np.float64)
        n = np.linalg.norm(self.sun_direction)
        if n < 1e-12:
            raise ValueError("sun direction must be nonzero")
        self.sun_direction = self.sun_direction / n


def terrain_height(scene: Scene, x, y):
    """Bilinear height lookup; queries outside the grid clamp to the border."""
    hx = np.asarray(scene.heights)
    ny, nx = hx.shape
    gx = (np.asarray(x, dtype=np.float64) - scene.origin[0]) / scene.cell_size
    gy = (np.asarray(y, dtype=np.float64) - scene.origin[1]) / scene.cell_size
    gx = np.clip(gx, 0.0, nx - 1.0)
    gy = np.clip(gy, 0.0, ny - 1.0)
    ix = np.minimum(np.floor(gx).astype(np.int64), nx - 2) if nx > 1 else np.zeros_like(gx, dtype=np.int64)
    iy = np.minimum(np.floor(gy).astype(np.int64), ny - 2) if ny > 1 else np.zeros_like(gy, dtype=np.int64)
    fx = gx - ix
    fy = gy - iy
    if nx == 1:
        fx = np.zeros_like(fx)
    if ny == 1:
        fy = np.zeros_like(fy)
    ix1 = np.minimum(ix + 1, nx - 1)
    iy1 = np.minimum(iy + 1, ny - 1)
    h00 = hx[iy, ix]
    h10 = hx[iy, ix1]
    h01 = hx[iy1, ix]
    h11 = hx[iy1, ix1]
    out = (h00 * (1 - fx) * (1 - fy) + h10 * fx * (1 - fy)
           + h01 * (1 - fx) * fy + h11 * fx * fy)
    return float(out) if out.ndim == 0 else out


def rock_center_z(scene: Scene, rock: Rock) -> float:
    """Sphere center height: the hemisphere rests on the terrain."""
    return terrain_height(scene, rock.x, rock.y)


def generate_scene(seed: int, params: SceneParams | None = None) -> Scene:
    """Deterministic arena from a seed: smooth terrain bumps + sampled rocks.

    Heightmap formula: h(x, y) = sum_i a_i * exp(-((x-cx_i)^2 + (y-cy_i)^2)
    / (2 * s_i^2)) with per-bump amplitude |a_i| <= roughness.
    """
    p = params or SceneParams()
    rng = np.random.Generator(np.random.Philox(
        key=np.array([seed, config.STREAM_SCENE << 48], dtype=np.uint64)))
    half = p.arena_size / 2.0
    n = int(round(p.arena_size / p.cell_size)) + 1
    xs = -half + p.cell_size * np.arange(n)
    gx, gy = np.meshgrid(xs, xs)
    heights = np.zeros((n, n))
    for _ in range(p.bump_count):
        cx_b, cy_b = rng.uniform(-half, half, size=2)
        sigma = rng.uniform(0.8, 2.0)
        amp = rng.uniform(-p.roughness, p.roughness)
        heights += amp * np.exp(-((gx - cx_b) ** 2 + (gy - cy_b) ** 2) / (2 * sigma ** 2))

    rocks: list[Rock] = []
    margin = half - p.radius_max
    if p.rock_count > 0 and margin <= 0:
        raise ScenePlacementError("arena too small for the requested rock radius")
    attempts = 0
    while len(rocks) < p.rock_count:
        if attempts >= p.max_attempts:
            raise ScenePlacementError(
                f"placed {len(rocks)}/{p.rock_count} rocks in {attempts} attempts")
        attempts += 1
        x, y = rng.uniform(-margin, margin, size=2)
        r = rng.uniform(p.radius_min, p.radius_max)
        if np.hypot(x, y) < p.start_clearance:
            continue
        if any(np.hypot(x - q.x, y - q.y) < p.rock_spacing for q in rocks):
            continue
        rocks.append(Rock(x, y, r))

    return Scene(heights=heights, origin=(-half, -half), cell_size=p.cell_size,
                 rocks=rocks, sun_direction=DEFAULT_SUN.copy(), seed=seed)


def scene_to_dict(scene: Scene) -> dict:
    return {
        "format": "rvscene",
        "version": 1,
        "seed": scene.seed,
        "origin": [scene.origin[0], scene.origin[1]],
        "cell_size": scene.cell_size,
        "heights": scene.heights.tolist(),
        "rocks": [[r.x, r.y, r.radius] for r in scene.rocks],
        "sun_direction": scene.sun_direction.tolist(),
    }


def scene_from_dict(d: dict) -> Scene:
    if d.get("format") != "rvscene" or d.get("version") != 1:
        raise ValueError("not a version-1 rvscene document")
    return Scene(
        heights=np.array(d["heights"], dtype=np.float64),
        origin=(float(d["origin"][0]), float(d["origin"][1])),
        cell_size=float(d["cell_size"]),
        rocks=[Rock(float(x), float(y), float(r)) for x, y, r in d["rocks"]],
        sun_direction=np.array(d["sun_direction"], dtype=np.float64),
        seed=int(d["seed"]),
    )


def save_scene(scene: Scene, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scene_to_dict(scene), sort_keys=True) + "\n")


def load_scene(path: str | Path) -> Scene:
    return scene_from_dict(json.loads(Path(path).read_text()))
