import numpy as np
import pytest

from hangpose import geometry as geo
from hangpose import so3
from hangpose.diffusion import Pose


@pytest.fixture(scope="module")
def mug():
    return geo.standard_mug(0)


@pytest.fixture(scope="module")
def height_rack():
    return geo.rack_archetype("height")


def mug_surface_distance(mug, pts):
    """Distance from each point to the union of the mug's analytic surfaces."""
    pts = np.asarray(pts)
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    rho = np.hypot(x, y)
    r, h, w = mug.body_radius, mug.body_height, mug.wall_thickness
    r_in = r - w

    def cyl(radius, z0, z1):
        dz = np.maximum(np.maximum(z0 - z, z - z1), 0.0)
        return np.hypot(rho - radius, dz)

    def disk(r0, r1, zp):
        dr = np.maximum(np.maximum(r0 - rho, rho - r1), 0.0)
        return np.hypot(np.abs(z - zp), dr)

    c = mug.handle_center
    s = np.hypot(x - c[0], z - c[2])
    torus = np.abs(np.hypot(s - mug.handle_major_radius, y) - mug.handle_minor_radius)
    dists = np.stack(
        [
            cyl(r, 0.0, h),
            cyl(r_in, w, h),
            disk(r_in, r, h),
            disk(0.0, r_in, w),
            disk(0.0, r, 0.0),
            torus,
        ]
    )
    return dists.min(axis=0)


class TestSurfaceSampling:
    def test_mug_points_on_surface(self, mug):
        rng = np.random.default_rng(0)
        cloud = geo.sample_surface(mug, 5000, rng)
        assert np.max(mug_surface_distance(mug, cloud)) < 1e-9

    def test_handle_area_fraction(self, mug):
        rng = np.random.default_rng(1)
        cloud = geo.sample_surface(mug, 100_000, rng)
        c = mug.handle_center
        s = np.hypot(cloud[:, 0] - c[0], cloud[:, 2] - c[2])
        on_handle = (
            np.abs(np.hypot(s - mug.handle_major_radius, cloud[:, 1]))
            >= mug.handle_minor_radius - 1e-9
        ) & (
            np.hypot(s - mug.handle_major_radius, cloud[:, 1])
            <= mug.handle_minor_radius + 1e-9
        )
        frac = on_handle.mean()
        areas = geo._mug_surfaces(mug)
        handle_share = areas[-1][0] / sum(a for a, _ in areas)
        assert abs(frac - handle_share) / handle_share < 0.03

    def test_deterministic_under_seed(self, mug):
        a = geo.sample_surface(mug, 256, np.random.default_rng(7))
        b = geo.sample_surface(mug, 256, np.random.default_rng(7))
        assert np.array_equal(a, b)

    def test_rack_sampling_covers_hooks(self, height_rack):
        rng = np.random.default_rng(3)
        cloud = geo.sample_surface(height_rack, 20_000, rng)
        for hook in height_rack.hooks:
            anchor = np.asarray(hook.anchor)
            tip = hook.centerline(np.array([hook.length]))[0]
            mid = 0.5 * (anchor + tip)
            near = np.linalg.norm(cloud - mid, axis=1) < hook.length
            assert near.sum() > 20

    def test_rejects_nonpositive_count(self, mug):
        with pytest.raises(ValueError):
            geo.sample_surface(mug, 0, np.random.default_rng(0))

    def test_write_xyz_roundtrip(self, mug, tmp_path):
        cloud = geo.sample_surface(mug, 64, np.random.default_rng(5))
        path = tmp_path / "cloud.xyz"
        geo.write_xyz(path, cloud)
        back = np.array(
            [[float(v) for v in line.split()] for line in path.read_text().splitlines()]
        )
        assert np.array_equal(back, cloud)


class TestVoxelize:
    def test_box_volume_within_2_percent(self):
        grid = geo.voxelize(geo.BoxSpec((0.1, 0.1, 0.1)), None, 0.002)
        assert abs(grid.volume() - 1e-3) / 1e-3 < 0.02

    def test_translation_invariance_within_1_percent(self):
        box = geo.BoxSpec((0.1, 0.1, 0.1))
        a = geo.voxelize(box, None, 0.002)
        b = geo.voxelize(box, Pose(np.eye(3), [0.0123, -0.0457, 0.0071]), 0.002)
        assert abs(a.occupied_count() - b.occupied_count()) / a.occupied_count() <= 0.01

    def test_empty_spec_zero_occupancy(self):
        grid = geo.voxelize(geo.BoxSpec((0.0, 0.0, 0.0)), None, 0.002)
        assert grid.occupied_count() == 0

    def test_rejects_bad_resolution(self):
        with pytest.raises(ValueError):
            geo.voxelize(geo.BoxSpec((0.1, 0.1, 0.1)), None, 0.0)

    def test_mug_volume_converges_with_resolution(self, mug):
        pose = Pose(so3.exp_rotation([0.3, 0.2, 0.1]), np.zeros(3))
        v4 = geo.voxelize(mug, pose, 0.004).volume()
        v2 = geo.voxelize(mug, pose, 0.002).volume()
        v1 = geo.voxelize(mug, pose, 0.001).volume()
        assert abs(v2 - v1) <= abs(v4 - v1)
        assert abs(v2 - v1) / v1 < 0.04

    def test_grid_covers_bbox_with_margin(self, mug):
        grid = geo.voxelize(mug, None, 0.002)
        lo, hi = mug.local_bounds()
        assert np.all(grid.origin <= lo - 0.002 + 1e-12)
        top = grid.origin + np.array(grid.dims) * grid.resolution
        assert np.all(top >= hi + 0.002 - 1e-12)


class TestOverlapVolume:
    def test_disjoint_boxes_zero(self):
        a = geo.voxelize(geo.BoxSpec((0.05, 0.05, 0.05)), None, 0.002)
        b = geo.voxelize(
            geo.BoxSpec((0.05, 0.05, 0.05)), Pose(np.eye(3), [0.2, 0.0, 0.0]), 0.002
        )
        assert geo.overlap_volume(a, b) == 0.0

    def test_identical_grids_full_volume(self):
        a = geo.voxelize(geo.BoxSpec((0.05, 0.05, 0.05)), None, 0.002)
        assert geo.overlap_volume(a, a) == a.volume()

    def test_partial_overlap_matches_analytic(self):
        box = geo.BoxSpec((0.1, 0.1, 0.1))
        a = geo.voxelize(box, None, 0.002)
        b = geo.voxelize(box, Pose(np.eye(3), [0.0503, 0.0611, 0.0007]), 0.002)
        analytic = (0.1 - 0.0503) * (0.1 - 0.0611) * (0.1 - 0.0007)
        assert abs(geo.overlap_volume(a, b) - analytic) / analytic < 0.05

    def test_resolution_mismatch_rejected(self):
        a = geo.voxelize(geo.BoxSpec((0.05, 0.05, 0.05)), None, 0.002)
        b = geo.voxelize(geo.BoxSpec((0.05, 0.05, 0.05)), None, 0.004)
        with pytest.raises(ValueError):
            geo.overlap_volume(a, b)

    def test_fast_path_matches_grid_and(self, mug, height_rack):
        pose = geo.hanging_pose(mug, height_rack.hooks[0], 0.7, 0.1, False, 0.002)
        shifted = Pose(pose.rotation, pose.translation - [0, 0, 0.012])
        res = 0.002
        direct = geo.overlap_volume(
            geo.voxelize(height_rack, None, res), geo.voxelize(mug, shifted, res)
        )
        fast = geo.mug_rack_overlap(mug, shifted, height_rack, res)
        assert direct == fast
        assert fast > 0.0


class TestHookThroughHandle:
    def test_generator_pose_threads(self, mug, height_rack):
        hook = height_rack.hooks[0]
        pose = geo.hanging_pose(mug, hook, 0.7, 0.0, False, 0.002)
        assert geo.hook_through_handle(mug, pose, hook)

    def test_far_translation_fails(self, mug, height_rack):
        hook = height_rack.hooks[0]
        pose = geo.hanging_pose(mug, hook, 0.7, 0.0, False, 0.002)
        far = Pose(pose.rotation, pose.translation + [1.0, 0, 0])
        assert not geo.hook_through_handle(mug, far, hook)

    def test_parallel_grazing_fails(self, mug, height_rack):
        hook = height_rack.hooks[0]
        pose = geo.hanging_pose(mug, hook, 0.7, 0.0, False, 0.002)
        spin = so3.exp_rotation(np.array([0.0, 0.0, np.pi / 2]))
        grazing = Pose(spin @ pose.rotation, pose.translation)
        assert not geo.hook_through_handle(mug, grazing, hook)

    def test_clearance_margin_enforced(self, mug, height_rack):
        hook = height_rack.hooks[0]
        shift = mug.hole_radius - hook.radius + 0.0005
        pose = geo.hanging_pose(mug, hook, 0.7, 0.0, False, drop=shift)
        assert not geo.hook_through_handle(mug, pose, hook)


class TestIsSuccess:
    def test_generated_pose_succeeds(self, mug, height_rack):
        hook = height_rack.hooks[0]
        pose = geo.hanging_pose(mug, hook, 0.72, 0.1, True, 0.003)
        assert geo.is_success(mug, pose, height_rack, hook)

    def test_pushed_into_post_fails(self, mug, height_rack):
        hook = height_rack.hooks[0]
        pose = geo.hanging_pose(mug, hook, 0.72, 0.0, False, 0.002)
        lowered = Pose(pose.rotation, pose.translation - [0, 0, 0.012])
        assert not geo.is_success(mug, lowered, height_rack, hook)

    def test_far_pose_fails(self, mug, height_rack):
        hook = height_rack.hooks[0]
        pose = Pose(np.eye(3), np.array([0.5, 0.5, 0.5]))
        assert not geo.is_success(mug, pose, height_rack, hook)

    def test_world_frame_invariance(self, mug, height_rack):
        hook = height_rack.hooks[0]
        base = geo.hanging_pose(mug, hook, 0.75, 0.05, False, 0.002)
        rng = np.random.default_rng(4)
        for _ in range(5):
            frame = Pose(so3.random_rotation(rng), rng.uniform(-0.5, 0.5, 3))
            moved = Pose(
                frame.rotation @ base.rotation,
                frame.rotation @ base.translation + frame.translation,
            )
            assert geo.is_success(
                mug, moved, height_rack, hook, rack_pose=frame
            ) == geo.is_success(mug, base, height_rack, hook)

    @pytest.mark.parametrize("kind", ["height", "length", "tilt", "section", "curve"])
    def test_every_archetype_hook_is_hangable(self, mug, kind):
        rack = geo.rack_archetype(kind)
        for hook in rack.hooks:
            pose = geo.hanging_pose(mug, hook, 0.8, 0.0, False, 0.002)
            assert geo.is_success(mug, pose, rack, hook), (kind, hook.id)


class TestSceneFiles:
    def test_roundtrip(self, mug, height_rack, tmp_path):
        path = tmp_path / "scene.json"
        geo.save_scene(path, mug, height_rack)
        mug2, rack2 = geo.load_scene(path)
        assert mug2 == mug
        assert rack2 == height_rack

    def test_hook_lookup(self, height_rack):
        assert height_rack.hook("higher").id == "higher"
        with pytest.raises(ValueError):
            height_rack.hook("missing")

    def test_unknown_archetype_rejected(self):
        with pytest.raises(ValueError):
            geo.rack_archetype("bogus")
