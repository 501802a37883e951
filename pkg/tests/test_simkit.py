"""Simulator tests: terrain, scene generation, dynamics, rendering."""

import math

import numpy as np
import pytest

from rvops import config
from rvops import geometry as g
from rvops import simkit as sk
from rvops.safety import TwistCommand

from conftest import down_camera, make_flat_scene


# -- terrain ---------------------------------------------------------------


def test_terrain_flat_everywhere(flat_scene):
    for x, y in [(0, 0), (3.3, -2.1), (100, 100), (-100, 0)]:
        assert sk.terrain_height(flat_scene, x, y) == 0.0


def test_terrain_bilinear_center():
    heights = np.array([[0.0, 0.0], [0.0, 1.0]])
    scene = sk.Scene(heights=heights, origin=(0.0, 0.0), cell_size=1.0,
                     rocks=[], sun_direction=[0, 0, 1], seed=1)
    assert sk.terrain_height(scene, 0.5, 0.5) == pytest.approx(0.25)
    # grid nodes return stored heights exactly
    assert sk.terrain_height(scene, 1.0, 1.0) == 1.0
    assert sk.terrain_height(scene, 0.0, 0.0) == 0.0
    # outside queries clamp to the border
    assert sk.terrain_height(scene, 5.0, 5.0) == 1.0
    assert sk.terrain_height(scene, -5.0, -5.0) == 0.0


def test_terrain_vectorized_matches_scalar():
    scene = sk.generate_scene(5)
    xs = np.linspace(-6, 6, 23)
    ys = np.linspace(-6, 6, 23)
    batch = sk.terrain_height(scene, xs, ys)
    for i in range(len(xs)):
        assert batch[i] == pytest.approx(sk.terrain_height(scene, xs[i], ys[i]))


# -- scene generation ------------------------------------------------------


def test_generate_scene_deterministic():
    a = sk.generate_scene(7)
    b = sk.generate_scene(7)
    assert np.array_equal(a.heights, b.heights)
    assert a.rocks == b.rocks
    assert sk.scene_to_dict(a) == sk.scene_to_dict(b)


def test_generate_scene_constraints():
    for seed in range(5):
        scene = sk.generate_scene(seed)
        assert len(scene.rocks) == 12
        for i, r in enumerate(scene.rocks):
            assert 0.1 <= r.radius <= 0.35
            assert math.hypot(r.x, r.y) >= 1.0
            for q in scene.rocks[i + 1:]:
                assert math.hypot(r.x - q.x, r.y - q.y) >= 0.5


def test_generate_scene_zero_rocks_never_collides():
    scene = sk.generate_scene(9, sk.SceneParams(rock_count=0))
    assert scene.rocks == []
    assert sk.check_collision(scene, sk.RoverState(x=1.0, y=1.0)) == []


def test_generate_scene_infeasible_raises():
    params = sk.SceneParams(arena_size=3.0, rock_count=200, max_attempts=2000)
    with pytest.raises(sk.ScenePlacementError):
        sk.generate_scene(1, params)


def test_scene_json_round_trip(tmp_path):
    scene = sk.generate_scene(13)
    path = tmp_path / "scene.json"
    sk.save_scene(scene, path)
    again = sk.load_scene(path)
    assert np.array_equal(scene.heights, again.heights)
    assert scene.rocks == again.rocks
    assert scene.seed == again.seed
    with pytest.raises(ValueError):
        sk.scene_from_dict({"format": "other", "version": 1})


# -- dynamics --------------------------------------------------------------


def test_step_rover_straight():
    st, _ = sk.step_rover(sk.RoverState(), TwistCommand(1.0, 0.0), 0.1,
                          limits=sk.TwistLimits(2, 2))
    assert st.x == pytest.approx(0.1)
    assert st.y == 0.0
    assert st.theta == 0.0


def test_step_rover_quarter_circle():
    st, _ = sk.step_rover(sk.RoverState(), TwistCommand(1.0, 1.0), math.pi / 2,
                          limits=sk.TwistLimits(2, 2))
    assert st.x == pytest.approx(1.0, abs=1e-9)
    assert st.y == pytest.approx(1.0, abs=1e-9)
    assert st.theta == pytest.approx(math.pi / 2, abs=1e-9)


def test_step_rover_rest_stays():
    st, _ = sk.step_rover(sk.RoverState(x=2, y=3, theta=0.5),
                          TwistCommand(0.0, 0.0), 0.05)
    assert (st.x, st.y, st.theta) == (2, 3, 0.5)


def test_step_rover_clamps_to_limits():
    st, _ = sk.step_rover(sk.RoverState(), TwistCommand(99.0, -99.0), 1.0)
    assert st.v == config.V_MAX
    assert st.omega == -config.OMEGA_MAX


def test_step_rover_rejects_bad_dt():
    with pytest.raises(ValueError):
        sk.step_rover(sk.RoverState(), TwistCommand(0, 0), 0.0)


def test_step_rover_small_omega_matches_straight():
    # below the straight-line threshold: identical branches
    a, _ = sk.step_rover(sk.RoverState(), TwistCommand(0.5, 1e-8), 0.05,
                         limits=sk.TwistLimits(2, 2))
    b, _ = sk.step_rover(sk.RoverState(), TwistCommand(0.5, 0.0), 0.05)
    assert math.hypot(a.x - b.x, a.y - b.y) < 1e-6
    # just above the threshold: arc formula converges to the straight line
    c, _ = sk.step_rover(sk.RoverState(), TwistCommand(0.5, 2e-6), 0.05,
                         limits=sk.TwistLimits(2, 2))
    assert math.hypot(c.x - b.x, c.y - b.y) < 1e-6


def test_step_rover_theta_wraps():
    st = sk.RoverState(theta=math.pi - 0.01)
    st, _ = sk.step_rover(st, TwistCommand(0.0, 1.0), 0.05)
    assert -math.pi < st.theta <= math.pi
    assert st.theta == pytest.approx(-math.pi + 0.04, abs=1e-9)


def test_odometry_noise_statistics():
    rng = np.random.default_rng(3)
    noise = sk.OdomNoise()
    meas = [sk.step_rover(sk.RoverState(), TwistCommand(0.2, 0.0), 0.05,
                          noise, rng)[1] for _ in range(2000)]
    vs = np.array([m[0] for m in meas])
    assert abs(vs.mean() - 0.2) < 0.002
    assert abs(vs.std() - config.ODOM_SIGMA_V) < 0.002


# -- collisions ------------------------------------------------------------


def test_check_collision_rules(flat_scene):
    scene = make_flat_scene(rocks=[sk.Rock(10.0, 0.0, 0.2)])
    assert sk.check_collision(scene, sk.RoverState()) == []
    scene = make_flat_scene(rocks=[sk.Rock(0.3, 0.0, 0.2)])
    assert sk.check_collision(scene, sk.RoverState(), r_rover=0.25) == [0]
    # boundary: exactly touching is not a collision (strict inequality)
    scene = make_flat_scene(rocks=[sk.Rock(0.45, 0.0, 0.2)])
    assert sk.check_collision(scene, sk.RoverState(), r_rover=0.25) == []


# -- rendering -------------------------------------------------------------


def test_render_depth_plumb_line(flat_scene, intrinsics):
    dep = sk.render_depth(flat_scene, down_camera(1.0), intrinsics,
                          noise_sigma=0.0)
    center = dep.data[intrinsics.height // 2, intrinsics.width // 2]
    assert center * intrinsics.depth_scale == pytest.approx(1.0, abs=0.002)
    # flat plane perpendicular to the axis: every pixel has depth 1.0
    assert np.all(dep.data == 1000)


def test_render_depth_sphere_analytic(intrinsics):
    scene = make_flat_scene(rocks=[sk.Rock(0.0, 0.0, 0.5)])
    dep = sk.render_depth(scene, down_camera(2.0), intrinsics, noise_sigma=0.0)
    center = dep.data[intrinsics.height // 2, intrinsics.width // 2]
    assert center * intrinsics.depth_scale == pytest.approx(1.5, abs=0.002)


def test_render_depth_deterministic(single_rock_scene, rover_camera, intrinsics):
    a = sk.render_depth(single_rock_scene, rover_camera, intrinsics, seq=4)
    b = sk.render_depth(single_rock_scene, rover_camera, intrinsics, seq=4)
    assert np.array_equal(a.data, b.data)
    c = sk.render_depth(single_rock_scene, rover_camera, intrinsics, seq=5)
    assert not np.array_equal(a.data, c.data)  # noise keyed by frame seq


def test_render_rgb_shading(flat_scene, intrinsics):
    rgb = sk.render_rgb(flat_scene, down_camera(1.0), intrinsics)
    assert np.all(rgb.data == round(0.8 * 255))
    # sky: camera looking straight up sees no geometry
    up = g.Pose(g.Quat.identity(), np.array([0.0, 0.0, 1.0]))
    sky = sk.render_rgb(flat_scene, up, intrinsics)
    assert np.all(sky.data == 0)
    dep = sk.render_depth(flat_scene, up, intrinsics, noise_sigma=0.0)
    assert np.all(dep.data == 0)


def test_render_rgb_deterministic(single_rock_scene, rover_camera, intrinsics):
    a = sk.render_rgb(single_rock_scene, rover_camera, intrinsics)
    b = sk.render_rgb(single_rock_scene, rover_camera, intrinsics)
    assert np.array_equal(a.data, b.data)


def test_render_rgbd_matches_individual_renders(single_rock_scene, rover_camera,
                                                intrinsics):
    rgb, dep = sk.render_rgbd(single_rock_scene, rover_camera, intrinsics,
                              seq=2, noise_sigma=config.DEPTH_SIGMA_M)
    rgb2 = sk.render_rgb(single_rock_scene, rover_camera, intrinsics, seq=2)
    dep2 = sk.render_depth(single_rock_scene, rover_camera, intrinsics, seq=2,
                           noise_sigma=config.DEPTH_SIGMA_M)
    assert np.array_equal(rgb.data, rgb2.data)
    assert np.array_equal(dep.data, dep2.data)


def _oracle_depth_grid(scene, cam_pose, k, us, vs, step=0.001):
    """Independent fine-step occupancy march (below terrain or inside rock)."""
    rot = g.rotation_matrix(cam_pose.rotation)
    origin = cam_pose.translation
    s = np.arange(step, config.DEPTH_MAX_RANGE_M + step, step)
    centers = [(r.x, r.y, sk.rock_center_z(scene, r), r.radius)
               for r in scene.rocks]
    out = np.zeros((len(vs), len(us)))
    for i, v in enumerate(vs):
        for j, u in enumerate(us):
            d = np.array([(u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0])
            d /= np.linalg.norm(d)
            dz_cam = d[2]
            dw = rot @ d
            pts = origin[None, :] + s[:, None] * dw[None, :]
            ter = sk.terrain_height(scene, pts[:, 0], pts[:, 1])
            occupied = pts[:, 2] < ter
            for cx, cy, cz, r in centers:
                inside = (np.linalg.norm(pts - [cx, cy, cz], axis=1) < r)
                occupied |= inside & (pts[:, 2] >= ter)
            hit = np.nonzero(occupied)[0]
            out[i, j] = s[hit[0]] * dz_cam if len(hit) else 0.0
    return out


@pytest.mark.parametrize("scene_fn", [
    lambda: make_flat_scene(rocks=[sk.Rock(1.6, 0.3, 0.25), sk.Rock(2.5, -0.8, 0.2)]),
    lambda: sk.generate_scene(31, sk.SceneParams(rock_count=0)),
])
def test_render_depth_against_fine_march_oracle(scene_fn, intrinsics):
    scene = scene_fn()
    cam = sk.camera_pose_for_state(scene, sk.RoverState(), g.body_to_camera())
    dep = sk.render_depth(scene, cam, intrinsics, noise_sigma=0.0)
    us = np.linspace(0, intrinsics.width - 1, 16).astype(int)
    vs = np.linspace(0, intrinsics.height - 1, 12).astype(int)
    oracle = _oracle_depth_grid(scene, cam, intrinsics, us, vs)
    got = dep.data[np.ix_(vs, us)] * intrinsics.depth_scale
    both = (oracle > 0) & (got > 0)
    # hit/miss classification agrees except possibly at silhouettes
    assert np.mean((oracle > 0) == (got > 0)) > 0.98
    assert np.max(np.abs(got[both] - oracle[both])) < 0.01


def test_camera_pose_follows_terrain():
    scene = sk.generate_scene(17)
    st = sk.RoverState(x=1.0, y=-2.0, theta=0.3)
    cam = sk.camera_pose_for_state(scene, st, g.body_to_camera())
    expected_z = sk.terrain_height(scene, 1.0, -2.0) + 0.5
    assert cam.translation[2] == pytest.approx(expected_z)


def test_frame_invariants(single_rock_scene, rover_camera, intrinsics):
    rgb, dep = sk.render_rgbd(single_rock_scene, rover_camera, intrinsics, seq=1)
    assert dep.data.shape == (intrinsics.height, intrinsics.width)
    assert rgb.data.shape == (intrinsics.height, intrinsics.width, 3)
    assert dep.data.dtype == np.uint16
    assert rgb.data.dtype == np.uint8
