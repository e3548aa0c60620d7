"""Demonstration datasets: generation, workspace normalization, and a
line-delimited text format that round-trips bit-exactly.

Each demo pairs the canonical mug and rack point clouds with one analytic
ground-truth hanging pose, a language condition, and its embedding. The
workspace normalization (offset and scale that map scene coordinates into
[-1, 1]^3) is stored in the dataset header and travels with checkpoints.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .diffusion import Pose
from .network import TrainExample, condition_registry, embed_condition

DATASET_VERSION = 1
_MAX_ATTEMPTS = 80


@dataclass
class Demo:
    scene_index: int
    hook_id: str
    mug_cloud: np.ndarray
    rack_cloud: np.ndarray
    target_pose: Pose
    condition: str
    embedding: np.ndarray


@dataclass
class Normalization:
    offset: np.ndarray
    scale: float

    def pose_to_normalized(self, pose: Pose) -> Pose:
        return Pose(pose.rotation, (pose.translation - self.offset) / self.scale)

    def pose_to_world(self, pose: Pose) -> Pose:
        return Pose(pose.rotation, pose.translation * self.scale + self.offset)

    def points_to_normalized(self, pts: np.ndarray) -> np.ndarray:
        return (np.asarray(pts) - self.offset) / self.scale


@dataclass
class Dataset:
    scenes: list[tuple[geo.MugSpec, geo.RackSpec]]
    demos: list[Demo]
    normalization: Normalization

    def scene_for(self, demo: Demo) -> tuple[geo.MugSpec, geo.RackSpec]:
        return self.scenes[demo.scene_index]

    def train_examples(self) -> list[TrainExample]:
        """Normalized training records; clouds are shared per scene."""
        norm = self.normalization
        cache: dict[tuple[int, str], np.ndarray] = {}
        out = []
        for demo in self.demos:
            key_m = (demo.scene_index, "mug")
            key_r = (demo.scene_index, "rack")
            if key_m not in cache:
                cache[key_m] = norm.points_to_normalized(demo.mug_cloud)
            if key_r not in cache:
                cache[key_r] = norm.points_to_normalized(demo.rack_cloud)
            out.append(
                TrainExample(
                    target=norm.pose_to_normalized(demo.target_pose),
                    mug_cloud=cache[key_m],
                    rack_cloud=cache[key_r],
                    condition=demo.condition,
                )
            )
        return out


def workspace_normalization(
    scenes: list[tuple[geo.MugSpec, geo.RackSpec]]
) -> Normalization:
    """Axis box covering every rack plus a mug-sized margin, mapped to [-1, 1]."""
    lo = np.full(3, np.inf)
    hi = np.full(3, -np.inf)
    margin = 0.0
    for mug, rack in scenes:
        rlo, rhi = rack.local_bounds()
        lo = np.minimum(lo, rlo)
        hi = np.maximum(hi, rhi)
        mlo, mhi = mug.local_bounds()
        margin = max(margin, float(np.max(mhi - mlo)))
    lo -= margin
    hi += margin
    offset = (lo + hi) / 2.0
    scale = float(np.max(hi - lo) / 2.0)
    return Normalization(offset=offset, scale=scale)


def _slide_window(
    mug: geo.MugSpec, rack: geo.RackSpec, hook: geo.HookSpec
) -> tuple[float, float]:
    """Slide range keeping the mug body clear of the post by 4 mm."""
    need = rack.post_radius + mug.body_radius + 0.004
    s_grid = np.linspace(0.0, hook.length, 200)
    pts = hook.centerline(s_grid)
    reach = np.hypot(pts[:, 0], pts[:, 1])
    ok = np.flatnonzero(reach >= need)
    if ok.size == 0:
        raise RuntimeError(f"hook {hook.id!r} too short for this mug")
    s_lo = s_grid[ok[0]] / hook.length
    s_hi = 0.92
    if s_hi - s_lo < 0.04:
        raise RuntimeError(f"hook {hook.id!r} leaves no feasible slide window")
    return float(s_lo), s_hi


def _condition_for(hook_id: str, mode: str) -> str:
    if mode == "per-hook":
        return hook_id
    if mode in ("arbitrary", "none"):
        return mode
    raise ValueError(f"unknown condition mode {mode!r}")


def generate_demos(
    scenes: list[tuple[geo.MugSpec, geo.RackSpec]],
    per_hook: int,
    rng: np.random.Generator,
    n_points: int = geo.DEFAULT_CLOUD_POINTS,
    condition_mode: str = "per-hook",
    resolution: float = geo.DEFAULT_RESOLUTION,
) -> Dataset:
    """Construct validated hanging demonstrations for every (scene, hook).

    Poses vary the slide along the hook, the roll about it, the facing of
    the handle, and a small vertical drop; every accepted pose passes
    is_success, and the generator aborts if it cannot find enough distinct
    valid poses.
    """
    if per_hook < 1:
        raise ValueError("per_hook must be >= 1")
    norm = workspace_normalization(scenes)
    demos: list[Demo] = []
    for scene_index, (mug, rack) in enumerate(scenes):
        mug_cloud = geo.sample_surface(mug, n_points, rng)
        rack_cloud = geo.sample_surface(rack, n_points, rng)
        for hook in rack.hooks:
            s_lo, s_hi = _slide_window(mug, rack, hook)
            clearance = mug.hole_radius - hook.radius
            if clearance <= 0.003:
                raise RuntimeError(f"hook {hook.id!r} too thick for this mug handle")
            accepted: list[Pose] = []
            attempts = 0
            while len(accepted) < per_hook:
                attempts += 1
                if attempts > _MAX_ATTEMPTS * per_hook:
                    raise RuntimeError(
                        f"could not build {per_hook} valid poses for hook "
                        f"{hook.id!r} (scene {scene_index})"
                    )
                pose = geo.hanging_pose(
                    mug,
                    hook,
                    slide=rng.uniform(s_lo, s_hi),
                    roll=rng.uniform(-0.3, 0.3),
                    flip=bool(rng.integers(0, 2)),
                    drop=rng.uniform(0.0005, clearance - 0.0025),
                )
                if not geo.is_success(mug, pose, rack, hook, resolution):
                    continue
                distinct = all(
                    np.linalg.norm(pose.translation - p.translation) > 1e-3
                    or np.max(np.abs(pose.rotation - p.rotation)) > 1e-3
                    for p in accepted
                )
                if not distinct:
                    continue
                accepted.append(pose)
            condition = _condition_for(hook.id, condition_mode)
            for pose in accepted:
                demos.append(
                    Demo(
                        scene_index=scene_index,
                        hook_id=hook.id,
                        mug_cloud=mug_cloud,
                        rack_cloud=rack_cloud,
                        target_pose=pose,
                        condition=condition,
                        embedding=embed_condition(condition),
                    )
                )
    return Dataset(scenes=list(scenes), demos=demos, normalization=norm)


# ---------------------------------------------------------------------------
# serialization (JSON lines; floats round-trip exactly via repr)


def save_dataset(path, dataset: Dataset) -> None:
    registry = condition_registry()
    header = {
        "type": "header",
        "version": DATASET_VERSION,
        "scenes": [geo.scene_to_dict(m, r) for m, r in dataset.scenes],
        "normalization": {
            "offset": dataset.normalization.offset.tolist(),
            "scale": dataset.normalization.scale,
        },
        "registry": {
            "ids": list(registry),
            "vecs": [registry[k].tolist() for k in registry],
        },
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for demo in dataset.demos:
            rec = {
                "type": "demo",
                "scene_index": demo.scene_index,
                "hook_id": demo.hook_id,
                "condition": demo.condition,
                "embedding": demo.embedding.tolist(),
                "rotation": demo.target_pose.rotation.ravel().tolist(),
                "translation": demo.target_pose.translation.tolist(),
                "mug_cloud": demo.mug_cloud.tolist(),
                "rack_cloud": demo.rack_cloud.tolist(),
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def load_dataset(path) -> Dataset:
    with open(path) as fh:
        header = json.loads(fh.readline())
        if header.get("type") != "header":
            raise ValueError("dataset file must start with a header record")
        if header["version"] != DATASET_VERSION:
            raise ValueError(f"unsupported dataset version {header['version']}")
        scenes = [geo.scene_from_dict(s) for s in header["scenes"]]
        norm = Normalization(
            offset=np.array(header["normalization"]["offset"]),
            scale=float(header["normalization"]["scale"]),
        )
        registry = condition_registry()
        for cid, vec in zip(header["registry"]["ids"], header["registry"]["vecs"]):
            if not np.array_equal(registry[cid], np.array(vec)):
                raise ValueError(f"registry mismatch for condition {cid!r}")
        demos = []
        for line in fh:
            rec = json.loads(line)
            if rec.get("type") != "demo":
                continue
            demos.append(
                Demo(
                    scene_index=rec["scene_index"],
                    hook_id=rec["hook_id"],
                    mug_cloud=np.array(rec["mug_cloud"]),
                    rack_cloud=np.array(rec["rack_cloud"]),
                    target_pose=Pose(
                        np.array(rec["rotation"]).reshape(3, 3),
                        np.array(rec["translation"]),
                    ),
                    condition=rec["condition"],
                    embedding=np.array(rec["embedding"]),
                )
            )
    return Dataset(scenes=scenes, demos=demos, normalization=norm)
