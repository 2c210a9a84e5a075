import math
import time

import numpy as np
import pytest

from comgrasp.errors import AmbiguousOrientationError, EmptyMaskError, InvalidInput, ObservationUnavailableError
from comgrasp.scene import GraspPose, RodObject, benchmark_objects, normalize_half_turn, top_down_camera
from comgrasp.sim import SlipParams, axis_sign, held_pose, simulate_lift
from comgrasp.vision import (
    OccupancyMask,
    SlipObservation,
    convex_hull,
    eelink_to_object,
    grasp_from_topdown,
    min_area_rect,
    min_area_rect_points,
    observe_side,
    read_pgm,
    render_mask,
    topdown_rod_pose,
    write_pgm,
)

from helpers import brute_force_min_area, hausdorff_pixels, random_mask

CAM = top_down_camera(0.0, 0.0, 2.0, (512, 512), 0.002)


def mod_pi(a):
    return abs(normalize_half_turn(a))


def rod_at(x, y, yaw, length=0.3, radius=0.01, **kw):
    return RodObject(length, radius, 1.0, **kw).resting(x, y, yaw)


def mask_of(grid, scale=1.0):
    return OccupancyMask(np.asarray(grid, dtype=bool), scale, CAM)


# ------------------------------------------------------------------- rendering


def test_axis_aligned_bounding_box():
    l, d = 0.3, 0.01
    grid = render_mask(rod_at(0.0123, -0.0071, 0.0, l, d), CAM).grid
    rows, cols = np.nonzero(grid)
    assert abs((cols.max() - cols.min() + 1) - (l + 2 * d) / CAM.scale) <= 1
    assert abs((rows.max() - rows.min() + 1) - 2 * d / CAM.scale) <= 1


def test_empty_scene_and_out_of_frame():
    with pytest.raises(EmptyMaskError):
        render_mask([], CAM)
    with pytest.raises(EmptyMaskError):
        render_mask(rod_at(5.0, 0.0, 0.0), CAM)


def rotate_mask(grid, angle):
    """Rotate occupied pixel centers about the image center (world-frame angle)."""
    H, W = grid.shape
    rows, cols = np.nonzero(grid)
    x = cols + 0.5 - W / 2
    y = -(rows + 0.5 - H / 2)  # image rows run along world -y
    c, s = math.cos(angle), math.sin(angle)
    xr, yr = c * x - s * y, s * x + c * y
    out = np.zeros_like(grid)
    out[np.floor(-yr + H / 2).astype(int), np.floor(xr + W / 2).astype(int)] = True
    return out


@pytest.mark.parametrize("angle", [0.3, 1.0, 2.2, -0.7])
def test_rotated_render_matches_rotated_mask(angle):
    cam = top_down_camera(0.0, 0.0, 2.0, (160, 160), 0.002)
    flat = render_mask(rod_at(0.0, 0.0, 0.0, 0.2, 0.012), cam).grid
    turned = render_mask(rod_at(0.0, 0.0, angle, 0.2, 0.012), cam).grid
    assert hausdorff_pixels(turned, rotate_mask(flat, angle)) <= 1.0 + 1e-9


def test_pgm_round_trip(tmp_path):
    mask = render_mask(rod_at(0.05, 0.02, 0.4), CAM)
    path = tmp_path / "m.pgm"
    write_pgm(mask, path)
    data = path.read_bytes()
    assert data.startswith(b"P5\n512 512\n255\n")
    assert set(np.unique(np.frombuffer(data[15:], dtype=np.uint8))) <= {0, 255}
    np.testing.assert_array_equal(read_pgm(path), mask.grid)


def test_read_pgm_rejects_garbage(tmp_path):
    path = tmp_path / "bad.pgm"
    path.write_bytes(b"P2\n1 1\n255\n0")
    with pytest.raises(InvalidInput):
        read_pgm(path)


# ----------------------------------------------------------------- rectangles


def test_axis_aligned_blob_rectangle():
    grid = np.zeros((40, 60), bool)
    grid[10:18, 5:35] = True  # 30 x 8 pixels
    rect = min_area_rect(mask_of(grid, 0.5))
    # the rectangle spans the outermost pixel centers
    assert rect.half_extents == pytest.approx((29 * 0.5 / 2, 7 * 0.5 / 2))
    np.testing.assert_allclose(rect.u, [1.0, 0.0])
    assert abs(rect.u @ rect.v) < 1e-9


def test_single_pixel_and_collinear():
    grid = np.zeros((9, 9), bool)
    grid[4, 4] = True
    assert min_area_rect(mask_of(grid)).half_extents == (0.0, 0.0)
    grid[4, 2:8] = True
    rect = min_area_rect(mask_of(grid))
    assert rect.half_extents == pytest.approx((2.5, 0.0))
    diag = np.eye(9, dtype=bool)
    rect = min_area_rect(mask_of(diag))
    assert rect.half_extents[1] == pytest.approx(0.0, abs=1e-12)
    assert rect.half_extents[0] == pytest.approx(4 * math.sqrt(2))


def test_empty_mask_rejected():
    with pytest.raises(InvalidInput):
        min_area_rect(mask_of(np.zeros((4, 4))))
    with pytest.raises(InvalidInput):
        min_area_rect_points(np.zeros((0, 2)))


def test_min_area_never_beats_brute_force():
    rng = np.random.default_rng(99)
    for _ in range(500):
        grid = random_mask(rng)
        rect = min_area_rect(mask_of(grid))
        pts = np.argwhere(grid)[:, ::-1].astype(float)
        assert rect.area <= brute_force_min_area(pts) + 1e-9
        # and it covers every occupied pixel center
        H, W = grid.shape
        rel = pts + 0.5 - np.array([W / 2, H / 2]) - rect.center
        a, b = rect.half_extents
        assert np.all(np.abs(rel @ rect.u) <= a + 1e-9)
        assert np.all(np.abs(rel @ rect.v) <= b + 1e-9)


def test_convex_hull_counter_clockwise():
    pts = np.array([[0, 0], [2, 0], [2, 1], [0, 1], [1, 0.5], [1, 0]], float)
    hull = convex_hull(pts)
    assert len(hull) == 4
    x, y = hull[:, 0], hull[:, 1]
    assert 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y) > 0


def test_rectangle_runtime_on_full_mask():
    cam = top_down_camera(0.45, 0.0)
    masks = [render_mask(rod_at(0.45, 0.0, a, 0.5, 0.03), cam) for a in np.linspace(0, 3, 10)]
    t0 = time.perf_counter()
    for m in masks:
        min_area_rect(m)
    assert (time.perf_counter() - t0) / len(masks) < 0.010


# -------------------------------------------------------------------- grasping


def test_grasp_from_topdown_example():
    cam = top_down_camera(0.3, 0.2)
    d = 0.01
    g = grasp_from_topdown(render_mask(rod_at(0.3, 0.2, 0.0, 0.3, d), cam), table_z=0.0, radius=d)
    assert g.x == pytest.approx(0.3, abs=cam.scale / 2)
    assert g.y == pytest.approx(0.2, abs=cam.scale / 2)
    assert g.z == pytest.approx(d)
    assert mod_pi(g.yaw - math.pi / 2) < 1e-12


def test_grasp_invariant_to_camera_translation():
    rod = rod_at(0.31, 0.17, 0.5)
    g1 = grasp_from_topdown(render_mask(rod, top_down_camera(0.3, 0.2)))
    g2 = grasp_from_topdown(render_mask(rod, top_down_camera(0.3 + 7 * 0.002, 0.2 - 11 * 0.002)))
    assert g2.x == pytest.approx(g1.x, abs=1e-9)
    assert g2.y == pytest.approx(g1.y, abs=1e-9)
    assert mod_pi(g2.yaw - g1.yaw) < 1e-9


def test_grasp_yaw_at_37_degrees():
    cam = top_down_camera(0.4, 0.0)
    rod = rod_at(0.4, 0.0, math.radians(37), 0.3)
    g = grasp_from_topdown(render_mask(rod, cam))
    assert mod_pi(g.yaw - math.radians(127)) <= math.atan(cam.scale / rod.length)


def test_benchmark_rods_yaw_recovered(rng):
    cam = top_down_camera(0.45, 0.0)
    for obj in benchmark_objects():
        for _ in range(10):
            yaw = rng.uniform(-math.pi, math.pi)
            rod = obj.resting(0.45 + rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), yaw)
            g = grasp_from_topdown(render_mask(rod, cam))
            assert mod_pi(g.yaw - yaw - math.pi / 2) <= math.atan(cam.scale / obj.length)


def test_square_blob_is_ambiguous():
    grid = np.zeros((20, 20), bool)
    grid[5:15, 5:15] = True
    with pytest.raises(AmbiguousOrientationError):
        grasp_from_topdown(mask_of(grid, 0.002))


def test_topdown_pose_follows_reference_direction():
    cam = top_down_camera(0.45, 0.0)
    rod = rod_at(0.45, 0.03, 2.5, 0.4)
    for ref in (rod.axis, -rod.axis):
        pose = topdown_rod_pose(mask=render_mask(rod, cam), reference_direction=ref)
        assert pose.R[:, 0] @ ref > 0.999
        np.testing.assert_allclose(pose.t[:2], rod.center[:2], atol=cam.scale)


# ------------------------------------------------------------------ side view


def side_setup(bench, rod, at, theta=0.0):
    p = rod.center + at * rod.axis
    g = GraspPose(p[0], p[1], p[2], rod.yaw - math.pi / 2, 150.0)
    held = held_pose(rod, g, theta, at, bench.scene.lift_height)
    return g, held


def test_static_grasp_at_com_sees_no_slip(bench):
    rod = rod_at(0.45, 0.0, 0.3, 0.4, 0.01, com_offset=0.05)
    g, held = side_setup(bench, rod, 0.05)
    obs = bench.observe(held, g, initial_contact_offset=0.05)
    assert obs.theta == pytest.approx(0.0, abs=1e-12)
    assert obs.contact_offset == pytest.approx(0.05, abs=bench.scene.side_camera.scale)
    assert not obs.slipped


def test_rotational_slip_is_flagged(bench):
    rod = rod_at(0.45, 0.0, 0.3, 0.4, 0.01, com_offset=0.1)
    g, held = side_setup(bench, rod, -0.05, theta=math.radians(25))
    obs = bench.observe(held, g)
    assert abs(math.degrees(obs.theta)) == pytest.approx(25, abs=0.2)
    assert obs.slipped


def test_simulated_slip_is_flagged(bench):
    rod = RodObject(0.4, 0.01, 2.0, 0.15, com_depth=0.01).resting(0.45, 0.0, 0.2)
    p = rod.center
    g = GraspPose(p[0], p[1], p[2], rod.yaw - math.pi / 2, 60.0)
    out = simulate_lift(rod, g, SlipParams(mu=0.4, theta_max=math.radians(60)))
    assert abs(out.final_theta) > math.radians(10)
    obs = bench.observe(held_pose(rod, g, out.final_theta, out.contact, bench.scene.lift_height), g)
    assert obs.slipped
    assert obs.theta == pytest.approx(out.final_theta, abs=math.radians(0.5))


def test_contact_offset_flips_for_mirrored_rod(bench):
    rod = rod_at(0.45, 0.0, 0.3, 0.4)
    g, held = side_setup(bench, rod, 0.08)
    mirrored = rod_at(0.45, 0.0, 0.3 + math.pi, 0.4)
    # same gripper pose, the rod turned end for end
    held_m = held_pose(mirrored, g, 0.0, -0.08 * axis_sign(mirrored, g) * axis_sign(rod, g),
                       bench.scene.lift_height)
    o1 = bench.observe(held, g)
    o2 = bench.observe(held_m, g)
    assert o1.contact_offset == pytest.approx(0.08, abs=0.002)
    assert o2.contact_offset == pytest.approx(-0.08, abs=0.002)


def test_heavy_occlusion_is_unavailable(bench):
    rod = rod_at(0.45, 0.0, 0.0, 0.2, 0.01)
    g, held = side_setup(bench, rod, 0.0)
    bench.observe(held, g)  # the fingers alone hide little of the rod
    with pytest.raises(ObservationUnavailableError):
        observe_side(held, bench.side_camera(g), occluders=((-0.095, 0.095, -0.02, 0.02),))


def test_identity_observation_gives_identity_transform():
    M = eelink_to_object(SlipObservation(0.0, 0.0, False))
    np.testing.assert_array_equal(M.R, np.eye(3))
    np.testing.assert_array_equal(M.p, np.zeros(3))


def test_offset_grasp_translation():
    # grasp 0.1 m along +x from the rod center: the center sits at eelink x = -0.1
    M = eelink_to_object(SlipObservation(0.0, 0.1, False, np.array([-0.1, 0.0, 0.0])))
    np.testing.assert_allclose(M.R, np.eye(3))
    np.testing.assert_allclose(M.p, [0.1, 0.0, 0.0])
    # the eelink origin is 0.1 m along the object's +x
    np.testing.assert_allclose(M.transform.apply(np.zeros(3)), [0.1, 0.0, 0.0])


def test_transform_maps_true_com_within_radius(bench, rng):
    for _ in range(20):
        d = rng.uniform(0.005, 0.03)
        rod = RodObject(0.4, d, 1.0, rng.uniform(-0.1, 0.1), com_depth=d).resting(0.45, 0.0, rng.uniform(-3, 3))
        at = rng.uniform(-0.15, 0.15)
        theta = rng.uniform(-0.6, 0.6)
        g, held = side_setup(bench, rod, at, theta)
        M = eelink_to_object(bench.observe(held, g))
        E = g.eelink_frame(bench.scene.lift_height)
        com_e = E.inverse().apply(held.com_world())
        got = M.transform.apply(com_e)
        expected_x = axis_sign(rod, g) * rod.com_offset
        assert abs(got[0] - expected_x) <= d
