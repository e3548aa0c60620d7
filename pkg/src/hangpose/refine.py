"""De-overlap refinement of predicted poses.

Near-miss predictions are re-proposed by adding a tiny DDPM forward step of
noise to the translation only. Collision-free proposals that still thread
the hook are ranked by the gravity-descent coverage coefficient: the pose
is lowered through a scan range and scored by the peak ratio of mug-rack
intersection volume to rack volume, which rejects states that merely avoid
contact without actually hanging.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffusion import Pose
from .geometry import (
    DEFAULT_RESOLUTION,
    HookSpec,
    MugSpec,
    RackSpec,
    _mug_hits_rack,
    _rack_occupancy,
    _relative_pose,
    hook_through_handle,
)
from .schedule import AdjustSchedule

DEFAULT_MAX_ITER = 100
DEFAULT_DESCENT_RANGE = 0.02
DEFAULT_DESCENT_STEPS = 21


@dataclass
class RefineResult:
    pose: Pose
    iterations: int
    c_gdc: float
    z_opt: float
    succeeded: bool


def gdc_coefficient(
    mug: MugSpec,
    pose: Pose,
    rack: RackSpec,
    z_max: float = DEFAULT_DESCENT_RANGE,
    n_steps: int = DEFAULT_DESCENT_STEPS,
    resolution: float = DEFAULT_RESOLUTION,
    rack_pose: Pose | None = None,
) -> tuple[float, float]:
    """Peak descent-coverage ratio and the depth attaining it.

    Lowers the mug by each z in a uniform scan of [0, z_max] and evaluates
    Vol(rack intersect mug) / Vol(rack) on the shared voxel lattice.
    """
    if z_max <= 0:
        raise ValueError("z_max must be positive")
    if n_steps < 2:
        raise ValueError("need at least 2 descent steps")
    centers, rack_count = _rack_occupancy(rack, resolution)
    rel = _relative_pose(pose, rack_pose)
    # Descent is along world -z; expressed in the rack frame.
    if rack_pose is None:
        drop_dir = np.array([0.0, 0.0, 1.0])
    else:
        drop_dir = rack_pose.rotation.T @ np.array([0.0, 0.0, 1.0])
    best_ratio, best_z = 0.0, 0.0
    for z in np.linspace(0.0, z_max, n_steps):
        lowered = Pose(rel.rotation, rel.translation - z * drop_dir)
        hits = _mug_hits_rack(mug, lowered, centers, resolution)
        ratio = hits / rack_count
        if ratio > best_ratio:
            best_ratio, best_z = float(ratio), float(z)
    return best_ratio, best_z


def jitter_translation(
    pose: Pose, adj: AdjustSchedule, rng: np.random.Generator
) -> Pose:
    """Forward-diffuse the translation by t_jitter tiny steps; rotation untouched."""
    a_bar = adj.retention()
    eps = rng.standard_normal(3)
    trans = np.sqrt(a_bar) * pose.translation + np.sqrt(1.0 - a_bar) * eps
    return Pose(pose.rotation.copy(), trans)


def refine_pose(
    mug: MugSpec,
    rack: RackSpec,
    hook: HookSpec,
    predicted: Pose,
    adj: AdjustSchedule,
    rng: np.random.Generator,
    max_iter: int = DEFAULT_MAX_ITER,
    resolution: float = DEFAULT_RESOLUTION,
    z_max: float = DEFAULT_DESCENT_RANGE,
    n_steps: int = DEFAULT_DESCENT_STEPS,
    rack_pose: Pose | None = None,
) -> RefineResult:
    """Search for a collision-free hanging pose around a prediction.

    A prediction that already succeeds is returned untouched with zero
    iterations. Otherwise every iteration jitters the original prediction
    (proposals are independent, not a random walk); all proposals that
    thread the hook without overlap are kept and the one with the highest
    coverage coefficient wins, ties broken by smallest deviation from the
    prediction. ``iterations`` reports the iteration that produced the
    first valid proposal, or max_iter when none was found.
    """
    centers, rack_count = _rack_occupancy(rack, resolution)

    def valid(pose: Pose) -> bool:
        if not hook_through_handle(mug, pose, hook, rack_pose):
            return False
        rel = _relative_pose(pose, rack_pose)
        return _mug_hits_rack(mug, rel, centers, resolution) == 0

    if valid(predicted):
        c, z = gdc_coefficient(
            mug, predicted, rack, z_max, n_steps, resolution, rack_pose
        )
        return RefineResult(predicted.copy(), 0, c, z, True)

    candidates: list[tuple[Pose, int]] = []
    for i in range(1, max_iter + 1):
        proposal = jitter_translation(predicted, adj, rng)
        if valid(proposal):
            candidates.append((proposal, i))
    if not candidates:
        return RefineResult(predicted.copy(), max_iter, 0.0, 0.0, False)

    scored = []
    for pose, found_at in candidates:
        c, z = gdc_coefficient(mug, pose, rack, z_max, n_steps, resolution, rack_pose)
        deviation = float(np.linalg.norm(pose.translation - predicted.translation))
        scored.append((c, z, deviation, pose, found_at))
    scored.sort(key=lambda row: (-row[0], row[2]))
    c, z, _, pose, _ = scored[0]
    first_found = candidates[0][1]
    return RefineResult(pose, first_found, c, z, True)
