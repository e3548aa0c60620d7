"""Procedural mug and rack geometry.

Analytic solids stand in for mesh assets: the mug is a hollow cylinder wall
plus solid floor plus a full torus handle; racks are a base box, a vertical
post capsule, and hook capsules (round, square, or single-arc). Everything
needed downstream derives from closed-form inside tests and surface
parameterizations: point clouds, voxel occupancy grids, overlap volumes,
and the hook-through-handle success predicate.

Mug frame: base center at the origin, axis +z, handle on +x.
Rack frame: base box centered on the origin in x/y sitting on z = 0, post
axis on z through the base.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .diffusion import Pose, identity_pose

DEFAULT_RESOLUTION = 0.002
DEFAULT_CLOUD_POINTS = 512

_ARC_SEGMENTS = 64


@dataclass(frozen=True)
class MugSpec:
    body_radius: float
    body_height: float
    wall_thickness: float
    handle_major_radius: float
    handle_minor_radius: float
    handle_center_height: float

    def __post_init__(self) -> None:
        vals = (
            self.body_radius,
            self.body_height,
            self.wall_thickness,
            self.handle_major_radius,
            self.handle_minor_radius,
            self.handle_center_height,
        )
        if any(v <= 0 for v in vals):
            raise ValueError("all mug dimensions must be positive")
        if self.handle_minor_radius >= self.handle_major_radius:
            raise ValueError("handle minor radius must be below the major radius")

    @property
    def handle_center(self) -> np.ndarray:
        """Torus center in the mug frame; the handle attaches outside the body."""
        return np.array(
            [
                self.body_radius + self.handle_major_radius,
                0.0,
                self.handle_center_height,
            ]
        )

    @property
    def hole_radius(self) -> float:
        """Radius of the open disk spanning the handle hole."""
        return self.handle_major_radius - self.handle_minor_radius

    def local_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        r, rm, rt = self.body_radius, self.handle_major_radius, self.handle_minor_radius
        hi_x = r + 2.0 * rm + rt
        z_lo = min(0.0, self.handle_center_height - rm - rt)
        z_hi = max(self.body_height, self.handle_center_height + rm + rt)
        return np.array([-r, -r, z_lo]), np.array([hi_x, r, z_hi])


@dataclass(frozen=True)
class HookSpec:
    """One hook: a capsule (or box) along a straight or single-arc centerline.

    ``direction`` is the unit tangent at the anchor (tilt already applied);
    ``arc_angle`` = 0 means straight, otherwise the centerline bends upward
    by that total angle over its length. ``section`` is "round" or "square".
    """

    id: str
    anchor: tuple[float, float, float]
    direction: tuple[float, float, float]
    length: float
    radius: float
    tilt: float = 0.0
    section: str = "round"
    arc_angle: float = 0.0

    def __post_init__(self) -> None:
        if self.length <= 0 or self.radius <= 0:
            raise ValueError("hook length and radius must be positive")
        if self.section not in ("round", "square"):
            raise ValueError(f"unknown hook section {self.section!r}")
        d = np.asarray(self.direction, dtype=float)
        if abs(np.linalg.norm(d) - 1.0) > 1e-6:
            raise ValueError("hook direction must be a unit vector")

    def _frame(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(tangent, in-plane up normal, binormal) at the anchor."""
        d = np.asarray(self.direction, dtype=float)
        up = np.array([0.0, 0.0, 1.0]) - d[2] * d
        n = np.linalg.norm(up)
        if n < 1e-9:
            up = np.array([1.0, 0.0, 0.0]) - d[0] * d
            n = np.linalg.norm(up)
        up = up / n
        return d, up, np.cross(d, up)

    def centerline(self, s: np.ndarray) -> np.ndarray:
        """Points of the centerline at arc length s in [0, length], shape (n, 3)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        a = np.asarray(self.anchor, dtype=float)
        d, up, _ = self._frame()
        if self.arc_angle == 0.0:
            return a[None, :] + s[:, None] * d[None, :]
        rc = self.length / self.arc_angle
        center = a + rc * up
        phi = s / rc
        return (
            center[None, :]
            + rc * np.sin(phi)[:, None] * d[None, :]
            - rc * np.cos(phi)[:, None] * up[None, :]
        )

    def tangent(self, s: float) -> np.ndarray:
        """Unit tangent of the centerline at arc length s."""
        d, up, _ = self._frame()
        if self.arc_angle == 0.0:
            return d
        phi = s * self.arc_angle / self.length
        return np.cos(phi) * d + np.sin(phi) * up


@dataclass(frozen=True)
class RackSpec:
    base_extents: tuple[float, float, float]
    post_radius: float
    post_height: float
    hooks: tuple[HookSpec, ...]

    def __post_init__(self) -> None:
        if len(self.hooks) < 1:
            raise ValueError("a rack needs at least one hook")
        if self.post_radius <= 0 or self.post_height <= 0:
            raise ValueError("post dimensions must be positive")

    def hook(self, hook_id: str) -> HookSpec:
        for h in self.hooks:
            if h.id == hook_id:
                return h
        raise ValueError(f"rack has no hook {hook_id!r}")

    def local_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        bx, by, bz = self.base_extents
        lo = np.array([-bx / 2, -by / 2, 0.0])
        hi = np.array([bx / 2, by / 2, bz + self.post_height + self.post_radius])
        for h in self.hooks:
            pts = h.centerline(np.linspace(0.0, h.length, _ARC_SEGMENTS))
            lo = np.minimum(lo, pts.min(axis=0) - h.radius)
            hi = np.maximum(hi, pts.max(axis=0) + h.radius)
        return lo, hi


@dataclass(frozen=True)
class BoxSpec:
    """Axis-aligned solid box centered on the origin in x/y, resting on z = 0."""

    extents: tuple[float, float, float]

    def local_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        ex, ey, ez = self.extents
        return np.array([-ex / 2, -ey / 2, 0.0]), np.array([ex / 2, ey / 2, ez])


@dataclass
class VoxelGrid:
    """Occupancy over a lattice-aligned axis box.

    The origin is snapped to multiples of the resolution, so grids built at
    the same resolution share one global lattice and intersect exactly.
    """

    origin: np.ndarray
    resolution: float
    dims: tuple[int, int, int]
    occupancy: np.ndarray

    def occupied_count(self) -> int:
        return int(np.count_nonzero(self.occupancy))

    def volume(self) -> float:
        return self.occupied_count() * self.resolution**3

    def occupied_centers(self) -> np.ndarray:
        idx = np.argwhere(self.occupancy)
        return self.origin + (idx + 0.5) * self.resolution


# ---------------------------------------------------------------------------
# inside tests (points in the spec's local frame)


def _segment_distances(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    denom = float(ab @ ab)
    if denom < 1e-18:
        return np.linalg.norm(pts - a, axis=1)
    t = np.clip((pts - a) @ ab / denom, 0.0, 1.0)
    return np.linalg.norm(pts - (a + t[:, None] * ab), axis=1)


def _hook_inside(hook: HookSpec, pts: np.ndarray) -> np.ndarray:
    a = np.asarray(hook.anchor, dtype=float)
    d, up, bi = hook._frame()
    rel = pts - a
    if hook.section == "square":
        # Box with half-width = radius around a straight centerline.
        s = rel @ d
        u = rel @ up
        v = rel @ bi
        return (
            (s >= 0.0)
            & (s <= hook.length)
            & (np.abs(u) <= hook.radius)
            & (np.abs(v) <= hook.radius)
        )
    if hook.arc_angle == 0.0:
        tip = a + hook.length * d
        return _segment_distances(pts, a, tip) <= hook.radius
    rc = hook.length / hook.arc_angle
    center = a + rc * up
    u = pts - center
    cd = u @ d
    cu = u @ up
    cb = u @ bi
    phi = np.arctan2(cd, -cu)
    phi = np.clip(phi, 0.0, hook.arc_angle)
    near = (
        center[None, :]
        + rc * np.sin(phi)[:, None] * d[None, :]
        - rc * np.cos(phi)[:, None] * up[None, :]
    )
    return np.linalg.norm(pts - near, axis=1) <= hook.radius


def mug_inside(mug: MugSpec, pts: np.ndarray) -> np.ndarray:
    """Solid membership for points (n, 3) in the mug frame."""
    pts = np.asarray(pts, dtype=float)
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    rho = np.hypot(x, y)
    r_in = mug.body_radius - mug.wall_thickness
    wall = (
        (rho <= mug.body_radius)
        & (rho >= r_in)
        & (z >= 0.0)
        & (z <= mug.body_height)
    )
    floor = (rho <= mug.body_radius) & (z >= 0.0) & (z <= mug.wall_thickness)
    cx = mug.body_radius + mug.handle_major_radius
    s = np.hypot(x - cx, z - mug.handle_center_height)
    handle = (s - mug.handle_major_radius) ** 2 + y**2 <= mug.handle_minor_radius**2
    return wall | floor | handle


def rack_inside(rack: RackSpec, pts: np.ndarray) -> np.ndarray:
    """Solid membership for points (n, 3) in the rack frame."""
    pts = np.asarray(pts, dtype=float)
    bx, by, bz = rack.base_extents
    inside = (
        (np.abs(pts[:, 0]) <= bx / 2)
        & (np.abs(pts[:, 1]) <= by / 2)
        & (pts[:, 2] >= 0.0)
        & (pts[:, 2] <= bz)
    )
    post_a = np.array([0.0, 0.0, bz])
    post_b = np.array([0.0, 0.0, bz + rack.post_height])
    inside |= _segment_distances(pts, post_a, post_b) <= rack.post_radius
    for hook in rack.hooks:
        inside |= _hook_inside(hook, pts)
    return inside


def box_inside(box: BoxSpec, pts: np.ndarray) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    ex, ey, ez = box.extents
    return (
        (np.abs(pts[:, 0]) <= ex / 2)
        & (np.abs(pts[:, 1]) <= ey / 2)
        & (pts[:, 2] >= 0.0)
        & (pts[:, 2] <= ez)
    )


def spec_inside(spec, pts: np.ndarray) -> np.ndarray:
    if isinstance(spec, MugSpec):
        return mug_inside(spec, pts)
    if isinstance(spec, RackSpec):
        return rack_inside(spec, pts)
    if isinstance(spec, BoxSpec):
        return box_inside(spec, pts)
    raise TypeError(f"cannot test membership for {type(spec).__name__}")


# ---------------------------------------------------------------------------
# surface sampling


def _sample_cylinder_shell(rng, n, radius, z0, z1):
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    z = rng.uniform(z0, z1, n)
    return np.column_stack([radius * np.cos(phi), radius * np.sin(phi), z])


def _sample_annulus(rng, n, r_in, r_out, z):
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    r = np.sqrt(rng.uniform(r_in**2, r_out**2, n))
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), np.full(n, z)])


def _sample_torus(rng, n, center, major, minor):
    """Torus with its ring in the x-z plane of the mug frame."""
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    psi = np.empty(n)
    filled = 0
    while filled < n:
        cand = rng.uniform(0.0, 2.0 * np.pi, n - filled)
        accept = rng.uniform(0.0, 1.0, n - filled) <= (
            (major + minor * np.cos(cand)) / (major + minor)
        )
        kept = cand[accept]
        psi[filled : filled + kept.size] = kept
        filled += kept.size
    ring_r = major + minor * np.cos(psi)
    return center + np.column_stack(
        [ring_r * np.cos(phi), minor * np.sin(psi), ring_r * np.sin(phi)]
    )


def _sample_box_faces(rng, n, lo, hi):
    ext = hi - lo
    areas = np.array(
        [
            ext[1] * ext[2],
            ext[1] * ext[2],
            ext[0] * ext[2],
            ext[0] * ext[2],
            ext[0] * ext[1],
            ext[0] * ext[1],
        ]
    )
    if areas.sum() <= 0:
        return np.zeros((0, 3))
    counts = rng.multinomial(n, areas / areas.sum())
    pts = []
    for face, count in enumerate(counts):
        if count == 0:
            continue
        p = lo + rng.uniform(0.0, 1.0, (count, 3)) * ext
        axis, side = divmod(face, 2)
        p[:, axis] = hi[axis] if side == 0 else lo[axis]
        pts.append(p)
    return np.vstack(pts) if pts else np.zeros((0, 3))


def _sample_sphere_cap(rng, n, center, radius, axis):
    """Hemisphere of the sphere at ``center`` on the +axis side."""
    v = rng.standard_normal((n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    flip = v @ axis < 0.0
    v[flip] -= 2.0 * np.outer((v[flip] @ axis), axis)
    return center + radius * v


def _mug_surfaces(mug: MugSpec):
    r, h, w = mug.body_radius, mug.body_height, mug.wall_thickness
    r_in = r - w
    c = mug.handle_center
    rm, rt = mug.handle_major_radius, mug.handle_minor_radius
    return [
        (2 * np.pi * r * h, lambda rng, n: _sample_cylinder_shell(rng, n, r, 0.0, h)),
        (
            2 * np.pi * r_in * (h - w),
            lambda rng, n: _sample_cylinder_shell(rng, n, r_in, w, h),
        ),
        (np.pi * (r**2 - r_in**2), lambda rng, n: _sample_annulus(rng, n, r_in, r, h)),
        (np.pi * r_in**2, lambda rng, n: _sample_annulus(rng, n, 0.0, r_in, w)),
        (np.pi * r**2, lambda rng, n: _sample_annulus(rng, n, 0.0, r, 0.0)),
        (4 * np.pi**2 * rm * rt, lambda rng, n: _sample_torus(rng, n, c, rm, rt)),
    ]


def _hook_surfaces(hook: HookSpec):
    a = np.asarray(hook.anchor, dtype=float)
    d, up, bi = hook._frame()
    r, ln = hook.radius, hook.length
    if hook.section == "square":

        def sample_sides(rng, n):
            s = rng.uniform(0.0, ln, n)
            off = rng.uniform(-r, r, n)
            face = rng.integers(0, 4, n)
            normal = np.where(face[:, None] < 2, up[None, :], bi[None, :])
            lateral = np.where(face[:, None] < 2, bi[None, :], up[None, :])
            sign = np.where(face % 2 == 0, 1.0, -1.0)
            return (
                a[None, :]
                + s[:, None] * d[None, :]
                + sign[:, None] * r * normal
                + off[:, None] * lateral
            )

        def sample_tip(rng, n):
            u = rng.uniform(-r, r, n)
            v = rng.uniform(-r, r, n)
            return a + ln * d + u[:, None] * up[None, :] + v[:, None] * bi[None, :]

        return [(4 * 2 * r * ln, sample_sides), ((2 * r) ** 2, sample_tip)]

    if hook.arc_angle == 0.0:

        def sample_lateral(rng, n):
            s = rng.uniform(0.0, ln, n)
            psi = rng.uniform(0.0, 2.0 * np.pi, n)
            radial = np.cos(psi)[:, None] * up[None, :] + np.sin(psi)[:, None] * bi[None, :]
            return a[None, :] + s[:, None] * d[None, :] + r * radial

        def sample_tip(rng, n):
            return _sample_sphere_cap(rng, n, a + ln * d, r, d)

        return [(2 * np.pi * r * ln, sample_lateral), (2 * np.pi * r**2, sample_tip)]

    rc = ln / hook.arc_angle
    center = a + rc * up

    def sample_arc(rng, n):
        phi = rng.uniform(0.0, hook.arc_angle, n)
        psi = np.empty(n)
        filled = 0
        while filled < n:
            cand = rng.uniform(0.0, 2.0 * np.pi, n - filled)
            accept = rng.uniform(0.0, 1.0, n - filled) <= (
                (rc + r * np.cos(cand)) / (rc + r)
            )
            kept = cand[accept]
            psi[filled : filled + kept.size] = kept
            filled += kept.size
        radial = np.sin(phi)[:, None] * d[None, :] - np.cos(phi)[:, None] * up[None, :]
        return (
            center[None, :]
            + (rc + r * np.cos(psi))[:, None] * radial
            + r * np.sin(psi)[:, None] * bi[None, :]
        )

    def sample_tip(rng, n):
        phi_end = hook.arc_angle
        tip = center + rc * (np.sin(phi_end) * d - np.cos(phi_end) * up)
        tangent = np.cos(phi_end) * d + np.sin(phi_end) * up
        return _sample_sphere_cap(rng, n, tip, r, tangent)

    return [(2 * np.pi * r * ln, sample_arc), (2 * np.pi * r**2, sample_tip)]


def _rack_surfaces(rack: RackSpec):
    bx, by, bz = rack.base_extents
    lo = np.array([-bx / 2, -by / 2, 0.0])
    hi = np.array([bx / 2, by / 2, bz])
    pr, ph = rack.post_radius, rack.post_height
    top = np.array([0.0, 0.0, bz + ph])
    surfaces = [
        (
            2 * (bx * by + bx * bz + by * bz),
            lambda rng, n: _sample_box_faces(rng, n, lo, hi),
        ),
        (
            2 * np.pi * pr * ph,
            lambda rng, n: _sample_cylinder_shell(rng, n, pr, bz, bz + ph),
        ),
        (
            2 * np.pi * pr**2,
            lambda rng, n: _sample_sphere_cap(
                rng, n, top, pr, np.array([0.0, 0.0, 1.0])
            ),
        ),
    ]
    for hook in rack.hooks:
        surfaces.extend(_hook_surfaces(hook))
    return surfaces


def sample_surface(spec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Area-weighted uniform sample over the union of analytic surfaces."""
    if n < 1:
        raise ValueError("need at least one point")
    if isinstance(spec, MugSpec):
        surfaces = _mug_surfaces(spec)
    elif isinstance(spec, RackSpec):
        surfaces = _rack_surfaces(spec)
    elif isinstance(spec, BoxSpec):
        lo, hi = spec.local_bounds()
        surfaces = [(1.0, lambda rng, k: _sample_box_faces(rng, k, lo, hi))]
    else:
        raise TypeError(f"cannot sample surface of {type(spec).__name__}")
    areas = np.array([a for a, _ in surfaces])
    counts = rng.multinomial(n, areas / areas.sum())
    parts = [fn(rng, int(c)) for (_, fn), c in zip(surfaces, counts) if c > 0]
    return np.vstack(parts)


def write_xyz(path, cloud: np.ndarray) -> None:
    """Plain-text xyz export, one point per line."""
    with open(path, "w") as fh:
        for p in np.asarray(cloud):
            fh.write(f"{float(p[0])!r} {float(p[1])!r} {float(p[2])!r}\n")


# ---------------------------------------------------------------------------
# voxelization and overlap


_MAX_VOXELS = 80_000_000


def voxelize(spec, pose: Pose | None, resolution: float) -> VoxelGrid:
    """Mark voxels whose centers lie inside the solid under ``pose``.

    The grid covers the posed bounding box with a one-voxel margin and its
    origin snaps to the global lattice of the given resolution.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    if pose is None:
        pose = identity_pose()
    lo, hi = spec.local_bounds()
    corners = np.array(
        [[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])]
    )
    world = pose.apply(corners)
    wmin, wmax = world.min(axis=0), world.max(axis=0)
    origin = (np.floor(wmin / resolution) - 1) * resolution
    dims = np.maximum(np.ceil((wmax - origin) / resolution).astype(int) + 1, 1)
    if int(np.prod(dims)) > _MAX_VOXELS:
        raise ValueError(f"voxel grid too large: dims {tuple(dims)}")
    axes = [origin[i] + (np.arange(dims[i]) + 0.5) * resolution for i in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    centers = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])
    occ = spec_inside(spec, pose.inverse_apply(centers)).reshape(tuple(dims))
    return VoxelGrid(
        origin=origin,
        resolution=resolution,
        dims=tuple(int(d) for d in dims),
        occupancy=occ,
    )


def overlap_volume(a: VoxelGrid, b: VoxelGrid) -> float:
    """Volume marked in both grids, in cubic meters.

    The grids must share a resolution. Lattice-aligned grids (the normal
    case here) intersect exactly by index shift; misaligned ones are
    re-rasterized onto a's lattice by nearest voxel center.
    """
    if abs(a.resolution - b.resolution) > 1e-12:
        raise ValueError(
            f"voxel resolution mismatch: {a.resolution} vs {b.resolution}"
        )
    res = a.resolution
    off = (b.origin - a.origin) / res
    off_int = np.round(off).astype(int)
    if np.max(np.abs(off - off_int)) > 1e-6:
        centers = b.occupied_centers()
        idx = np.floor((centers - a.origin) / res).astype(int)
        good = np.all((idx >= 0) & (idx < np.array(a.dims)), axis=1)
        idx = idx[good]
        hits = a.occupancy[idx[:, 0], idx[:, 1], idx[:, 2]]
        return float(np.count_nonzero(hits)) * res**3

    lo = np.maximum(off_int, 0)
    hi = np.minimum(off_int + np.array(b.dims), np.array(a.dims))
    if np.any(hi <= lo):
        return 0.0
    sub_a = a.occupancy[lo[0] : hi[0], lo[1] : hi[1], lo[2] : hi[2]]
    blo = lo - off_int
    bhi = hi - off_int
    sub_b = b.occupancy[blo[0] : bhi[0], blo[1] : bhi[1], blo[2] : bhi[2]]
    return float(np.count_nonzero(sub_a & sub_b)) * res**3


@functools.lru_cache(maxsize=16)
def _rack_occupancy(rack: RackSpec, resolution: float):
    """Cached rack-frame voxelization: (occupied centers, count)."""
    grid = voxelize(rack, None, resolution)
    return grid.occupied_centers(), grid.occupied_count()


def _relative_pose(mug_pose: Pose, rack_pose: Pose | None) -> Pose:
    if rack_pose is None:
        return mug_pose.copy()
    rot = rack_pose.rotation.T @ mug_pose.rotation
    trans = rack_pose.rotation.T @ (mug_pose.translation - rack_pose.translation)
    return Pose(rot, trans)


def _mug_hits_rack(
    mug: MugSpec, rel: Pose, centers: np.ndarray, resolution: float
) -> int:
    """Count rack-occupied voxel centers (rack frame) inside the posed mug.

    Because both occupancies live on one snapped lattice, this equals the
    voxel-AND overlap count of the two grids.
    """
    lo, hi = mug.local_bounds()
    corners = np.array(
        [[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])]
    )
    world = rel.apply(corners)
    wmin = world.min(axis=0) - resolution
    wmax = world.max(axis=0) + resolution
    mask = np.all((centers >= wmin) & (centers <= wmax), axis=1)
    if not np.any(mask):
        return 0
    local = rel.inverse_apply(centers[mask])
    return int(np.count_nonzero(mug_inside(mug, local)))


def mug_rack_overlap(
    mug: MugSpec,
    mug_pose: Pose,
    rack: RackSpec,
    resolution: float = DEFAULT_RESOLUTION,
    rack_pose: Pose | None = None,
) -> float:
    """Overlap volume between the posed mug and the rack, cubic meters."""
    rel = _relative_pose(mug_pose, rack_pose)
    centers, _ = _rack_occupancy(rack, resolution)
    return _mug_hits_rack(mug, rel, centers, resolution) * resolution**3


def hook_through_handle(
    mug: MugSpec,
    pose: Pose,
    hook: HookSpec,
    rack_pose: Pose | None = None,
) -> bool:
    """True if the hook centerline threads the handle hole with clearance.

    The hole is the open disk of radius (major - minor) spanning the torus
    hole; threading requires a transversal crossing whose distance to the
    disk boundary exceeds the hook radius.
    """
    rel = _relative_pose(pose, rack_pose)
    s = np.linspace(0.0, hook.length, _ARC_SEGMENTS + 1 if hook.arc_angle else 2)
    line = rel.inverse_apply(hook.centerline(s))
    center = mug.handle_center
    clearance = mug.hole_radius - hook.radius
    if clearance <= 0.0:
        return False
    y = line[:, 1] - center[1]
    for i in range(len(line) - 1):
        y0, y1 = y[i], y[i + 1]
        if y0 == y1:
            continue  # parallel to the disk plane: grazing, not a crossing
        if (y0 < 0.0) == (y1 < 0.0):
            continue
        frac = y0 / (y0 - y1)
        q = line[i] + frac * (line[i + 1] - line[i])
        if np.linalg.norm(q - center) < clearance:
            return True
    return False


def is_success(
    mug: MugSpec,
    pose: Pose,
    rack: RackSpec,
    hook: HookSpec,
    resolution: float = DEFAULT_RESOLUTION,
    rack_pose: Pose | None = None,
) -> bool:
    """Hanging success: the hook threads the handle and nothing overlaps."""
    if not hook_through_handle(mug, pose, hook, rack_pose):
        return False
    return mug_rack_overlap(mug, pose, rack, resolution, rack_pose) == 0.0


# ---------------------------------------------------------------------------
# hanging pose construction and the standard scene library


def hanging_pose(
    mug: MugSpec,
    hook: HookSpec,
    slide: float,
    roll: float = 0.0,
    flip: bool = False,
    drop: float = 0.0,
    rack_pose: Pose | None = None,
) -> Pose:
    """Construct a pose that threads the hook through the handle hole.

    ``slide`` in [0, 1] places the hole center along the hook; ``roll``
    swings the mug about the local hook tangent; ``flip`` mirrors the hole
    normal; ``drop`` lowers the mug (toward resting on the hook).
    """
    s = slide * hook.length
    q = hook.centerline(np.array([s]))[0]
    d = hook.tangent(s)
    if flip:
        d = -d
    up = np.array([0.0, 0.0, 1.0]) - d[2] * d
    n = np.linalg.norm(up)
    if n < 1e-9:
        up = np.array([1.0, 0.0, 0.0]) - d[0] * d
        n = np.linalg.norm(up)
    up = up / n
    # Columns: images of the mug axes. Handle radial (x) maps near world-up,
    # hole normal (y) maps onto the hook tangent.
    rot = np.column_stack([up, d, np.cross(up, d)])
    if roll != 0.0:
        c, sn = np.cos(roll), np.sin(roll)
        k = np.array([[0, -d[2], d[1]], [d[2], 0, -d[0]], [-d[1], d[0], 0]])
        rot = (np.eye(3) + sn * k + (1 - c) * (k @ k)) @ rot
    trans = q - rot @ mug.handle_center - np.array([0.0, 0.0, drop])
    local = Pose(rot, trans)
    if rack_pose is None:
        return local
    return Pose(
        rack_pose.rotation @ local.rotation,
        rack_pose.rotation @ local.translation + rack_pose.translation,
    )


def standard_mug(index: int = 0) -> MugSpec:
    """A small library of mug parameter sets."""
    presets = [
        dict(
            body_radius=0.038,
            body_height=0.090,
            wall_thickness=0.004,
            handle_major_radius=0.016,
            handle_minor_radius=0.0045,
            handle_center_height=0.050,
        ),
        dict(
            body_radius=0.042,
            body_height=0.100,
            wall_thickness=0.0045,
            handle_major_radius=0.017,
            handle_minor_radius=0.005,
            handle_center_height=0.055,
        ),
        dict(
            body_radius=0.035,
            body_height=0.082,
            wall_thickness=0.0035,
            handle_major_radius=0.015,
            handle_minor_radius=0.004,
            handle_center_height=0.046,
        ),
        dict(
            body_radius=0.045,
            body_height=0.108,
            wall_thickness=0.005,
            handle_major_radius=0.018,
            handle_minor_radius=0.0052,
            handle_center_height=0.060,
        ),
    ]
    return MugSpec(**presets[index % len(presets)])


_RACK_KINDS = ("height", "length", "tilt", "section", "curve")


def rack_archetype(kind: str, hook_ids: tuple[str, ...] | None = None) -> RackSpec:
    """One of the five rack archetypes; each pairs two contrasting hooks.

    ``hook_ids`` optionally restricts the rack to a subset of its hooks
    (e.g. a single-hook variant for uni-modal experiments).
    """
    base = dict(base_extents=(0.16, 0.16, 0.02), post_radius=0.012, post_height=0.35)
    pr = base["post_radius"]
    if kind == "height":
        hooks = (
            HookSpec("higher", (pr, 0.0, 0.30), (1.0, 0.0, 0.0), 0.08, 0.004),
            HookSpec("lower", (-pr, 0.0, 0.20), (-1.0, 0.0, 0.0), 0.08, 0.004),
        )
    elif kind == "length":
        hooks = (
            HookSpec("longer", (pr, 0.0, 0.28), (1.0, 0.0, 0.0), 0.110, 0.004),
            HookSpec("shorter", (-pr, 0.0, 0.22), (-1.0, 0.0, 0.0), 0.062, 0.004),
        )
    elif kind == "tilt":
        t = 0.30
        hooks = (
            HookSpec("horizontal", (pr, 0.0, 0.28), (1.0, 0.0, 0.0), 0.085, 0.004),
            HookSpec(
                "tilted",
                (-pr, 0.0, 0.21),
                (-float(np.cos(t)), 0.0, float(np.sin(t))),
                0.085,
                0.004,
                tilt=t,
            ),
        )
    elif kind == "section":
        hooks = (
            HookSpec("cylindrical", (pr, 0.0, 0.28), (1.0, 0.0, 0.0), 0.08, 0.004),
            HookSpec(
                "rectangular",
                (-pr, 0.0, 0.21),
                (-1.0, 0.0, 0.0),
                0.08,
                0.004,
                section="square",
            ),
        )
    elif kind == "curve":
        hooks = (
            HookSpec("straight", (pr, 0.0, 0.28), (1.0, 0.0, 0.0), 0.085, 0.004),
            HookSpec(
                "curved",
                (-pr, 0.0, 0.21),
                (-1.0, 0.0, 0.0),
                0.085,
                0.004,
                arc_angle=0.6,
            ),
        )
    else:
        raise ValueError(f"unknown rack kind {kind!r}; choices: {_RACK_KINDS}")
    if hook_ids is not None:
        hooks = tuple(h for h in hooks if h.id in hook_ids)
        if not hooks:
            raise ValueError(f"no hooks left after filtering to {hook_ids}")
    return RackSpec(hooks=hooks, **base)


def hook_phrase(hook_id: str) -> str:
    return f"place the mug on the {hook_id} rack"


# ---------------------------------------------------------------------------
# scene files


def scene_to_dict(mug: MugSpec, rack: RackSpec) -> dict:
    return {
        "mug": {
            "body_radius": mug.body_radius,
            "body_height": mug.body_height,
            "wall_thickness": mug.wall_thickness,
            "handle_major_radius": mug.handle_major_radius,
            "handle_minor_radius": mug.handle_minor_radius,
            "handle_center_height": mug.handle_center_height,
        },
        "rack": {
            "base_extents": list(rack.base_extents),
            "post_radius": rack.post_radius,
            "post_height": rack.post_height,
            "hooks": [
                {
                    "id": h.id,
                    "anchor": list(h.anchor),
                    "direction": list(h.direction),
                    "length": h.length,
                    "radius": h.radius,
                    "tilt": h.tilt,
                    "section": h.section,
                    "arc_angle": h.arc_angle,
                }
                for h in rack.hooks
            ],
        },
    }


def scene_from_dict(data: dict) -> tuple[MugSpec, RackSpec]:
    mug = MugSpec(**data["mug"])
    rack = RackSpec(
        base_extents=tuple(data["rack"]["base_extents"]),
        post_radius=data["rack"]["post_radius"],
        post_height=data["rack"]["post_height"],
        hooks=tuple(
            HookSpec(
                id=h["id"],
                anchor=tuple(h["anchor"]),
                direction=tuple(h["direction"]),
                length=h["length"],
                radius=h["radius"],
                tilt=h.get("tilt", 0.0),
                section=h.get("section", "round"),
                arc_angle=h.get("arc_angle", 0.0),
            )
            for h in data["rack"]["hooks"]
        ),
    )
    return mug, rack


def save_scene(path, mug: MugSpec, rack: RackSpec) -> None:
    Path(path).write_text(json.dumps(scene_to_dict(mug, rack), indent=2) + "\n")


def load_scene(path) -> tuple[MugSpec, RackSpec]:
    return scene_from_dict(json.loads(Path(path).read_text()))
