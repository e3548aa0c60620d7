"""Conditional noise-prediction network with hand-written backpropagation.

Encoders for pose, the two point clouds, the language condition, and the
timestep feed an attention-gated MLP head that emits the 2x3 noise estimate.
Everything is plain float64 numpy; gradients are analytic and checked
against central finite differences in the test suite.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass, field

import numpy as np

from .diffusion import (
    NoisePair,
    Pose,
    forward_rotation,
    forward_translation,
)
from .igso3 import TableCache
from .schedule import NoiseSchedule, make_schedule

POSE_DIM = 12
POSE_FEAT = 64
CLOUD_HIDDEN = 64
CLOUD_FEAT = 128
COND_FEAT = 64
TIME_FEAT = 64
GATE_DIM = 32
HEAD_HIDDEN = (256, 128)

_BUNDLE = POSE_FEAT + 2 * CLOUD_FEAT + COND_FEAT + TIME_FEAT  # 448
_BLOCK_SLICES = (
    slice(0, POSE_FEAT),
    slice(POSE_FEAT, POSE_FEAT + CLOUD_FEAT),
    slice(POSE_FEAT + CLOUD_FEAT, POSE_FEAT + 2 * CLOUD_FEAT),
    slice(POSE_FEAT + 2 * CLOUD_FEAT, POSE_FEAT + 2 * CLOUD_FEAT + COND_FEAT),
    slice(POSE_FEAT + 2 * CLOUD_FEAT + COND_FEAT, _BUNDLE),
)

HOOK_CONDITIONS = (
    "longer",
    "shorter",
    "higher",
    "lower",
    "horizontal",
    "tilted",
    "rectangular",
    "cylindrical",
    "curved",
    "straight",
)
_REGISTRY_SEED = 20240


@functools.lru_cache(maxsize=1)
def condition_registry() -> dict[str, np.ndarray]:
    """Fixed registry of L2-normalized 64-dim condition embeddings.

    Ten hook phrases plus "arbitrary" and "none", generated once from a
    seeded construction and frozen; unknown phrases are rejected, standing
    in for language the model was never trained on.
    """
    rng = np.random.default_rng(_REGISTRY_SEED)
    ids = HOOK_CONDITIONS + ("arbitrary", "none")
    registry = {}
    for cid in ids:
        v = rng.standard_normal(COND_FEAT)
        registry[cid] = v / np.linalg.norm(v)
    return registry


def embed_condition(condition_id: str) -> np.ndarray:
    registry = condition_registry()
    if condition_id not in registry:
        raise ValueError(f"unknown condition id {condition_id!r}")
    return registry[condition_id].copy()


def encode_timestep(t: int, total: int) -> np.ndarray:
    """Sinusoidal positional encoding of the step index, 64 dims."""
    if not 0 <= t < total:
        raise ValueError(f"timestep {t} outside [0, {total})")
    half = TIME_FEAT // 2
    freqs = 1.0 / (10000.0 ** (np.arange(half) / half))
    angles = t * freqs
    enc = np.empty(TIME_FEAT)
    enc[0::2] = np.sin(angles)
    enc[1::2] = np.cos(angles)
    return enc


def pose_features(pose: Pose) -> np.ndarray:
    """Flatten to the 12-vector network input: row-major rotation, translation."""
    return np.concatenate([pose.rotation.ravel(), pose.translation])


def init_params(rng: np.random.Generator) -> dict[str, np.ndarray]:
    def layer(name, out_dim, in_dim):
        return {
            f"{name}_w": rng.standard_normal((out_dim, in_dim)) / np.sqrt(in_dim),
            f"{name}_b": np.zeros(out_dim),
        }

    params: dict[str, np.ndarray] = {}
    params.update(layer("pose1", POSE_FEAT, POSE_DIM))
    params.update(layer("pose2", POSE_FEAT, POSE_FEAT))
    for prefix in ("mug", "rack"):
        params.update(layer(f"{prefix}1", CLOUD_HIDDEN, 3))
        params.update(layer(f"{prefix}2", CLOUD_FEAT, CLOUD_HIDDEN))
    params.update(layer("gate1", GATE_DIM, _BUNDLE))
    params.update(layer("gate2", 5, GATE_DIM))
    head_in = _BUNDLE + POSE_DIM
    params.update(layer("head1", HEAD_HIDDEN[0], head_in))
    params.update(layer("head2", HEAD_HIDDEN[1], HEAD_HIDDEN[0]))
    params.update(layer("head3", 6, HEAD_HIDDEN[1]))
    return params


def encode_pose(pose: Pose, params: dict[str, np.ndarray]) -> np.ndarray:
    x = pose_features(pose)
    h = np.tanh(params["pose1_w"] @ x + params["pose1_b"])
    return np.tanh(params["pose2_w"] @ h + params["pose2_b"])


_CLOUD_PAD = 1024


def _cloud_forward(cloud: np.ndarray, params, prefix: str):
    """Shared-weight per-point MLP with max pooling; returns the cache too.

    Clouds up to 1024 points are cycle-padded to exactly 1024 rows so every
    cloud goes through the same matmul kernel: padding with duplicates
    cannot change a max pool, and it makes the feature bitwise independent
    of the point count (BLAS kernels vary with the row count otherwise).
    """
    pts = np.asarray(cloud, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
        raise ValueError("point cloud must have shape (n, 3) with n >= 1")
    n = pts.shape[0]
    if n <= _CLOUD_PAD:
        pts = pts[np.arange(_CLOUD_PAD) % n]
    h1 = np.tanh(pts @ params[f"{prefix}1_w"].T + params[f"{prefix}1_b"])
    h2 = np.tanh(h1 @ params[f"{prefix}2_w"].T + params[f"{prefix}2_b"])
    arg = np.argmax(h2, axis=0)
    feat = h2[arg, np.arange(h2.shape[1])]
    return feat, (pts, h1, h2, arg)


def encode_cloud(cloud: np.ndarray, params, prefix: str = "mug") -> np.ndarray:
    """Order-invariant 128-dim cloud feature (PointNet-style max pooling)."""
    feat, _ = _cloud_forward(cloud, params, prefix)
    return feat


def _cloud_backward(d_feat: np.ndarray, cache, params, prefix: str, grads) -> None:
    pts, h1, h2, arg = cache
    dh2 = np.zeros_like(h2)
    dh2[arg, np.arange(h2.shape[1])] = d_feat
    dz2 = dh2 * (1.0 - h2**2)
    grads[f"{prefix}2_w"] += dz2.T @ h1
    grads[f"{prefix}2_b"] += dz2.sum(axis=0)
    dh1 = dz2 @ params[f"{prefix}2_w"]
    dz1 = dh1 * (1.0 - h1**2)
    grads[f"{prefix}1_w"] += dz1.T @ pts
    grads[f"{prefix}1_b"] += dz1.sum(axis=0)


def _softmax(u: np.ndarray) -> np.ndarray:
    e = np.exp(u - u.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _forward_batch(params, pose_x, phi_a, phi_b, phi_l, phi_t):
    """Vectorized forward over a batch; returns outputs and the cache."""
    hp1 = np.tanh(pose_x @ params["pose1_w"].T + params["pose1_b"])
    hp2 = np.tanh(hp1 @ params["pose2_w"].T + params["pose2_b"])
    bundle = np.concatenate([hp2, phi_a, phi_b, phi_l, phi_t], axis=1)
    ga = np.tanh(bundle @ params["gate1_w"].T + params["gate1_b"])
    gu = ga @ params["gate2_w"].T + params["gate2_b"]
    gw = _softmax(gu)
    gated = bundle.copy()
    for i, sl in enumerate(_BLOCK_SLICES):
        gated[:, sl] *= gw[:, i : i + 1]
    head_in = np.concatenate([gated, pose_x], axis=1)
    hh1 = np.tanh(head_in @ params["head1_w"].T + params["head1_b"])
    hh2 = np.tanh(hh1 @ params["head2_w"].T + params["head2_b"])
    out = hh2 @ params["head3_w"].T + params["head3_b"]
    cache = (pose_x, hp1, hp2, bundle, ga, gw, gated, head_in, hh1, hh2)
    return out, cache


def _backward_batch(d_out, cache, params, grads):
    """Backward pass matching _forward_batch; returns d(bundle blocks)."""
    pose_x, hp1, hp2, bundle, ga, gw, gated, head_in, hh1, hh2 = cache
    grads["head3_w"] += d_out.T @ hh2
    grads["head3_b"] += d_out.sum(axis=0)
    dhh2 = d_out @ params["head3_w"]
    dz2 = dhh2 * (1.0 - hh2**2)
    grads["head2_w"] += dz2.T @ hh1
    grads["head2_b"] += dz2.sum(axis=0)
    dhh1 = dz2 @ params["head2_w"]
    dz1 = dhh1 * (1.0 - hh1**2)
    grads["head1_w"] += dz1.T @ head_in
    grads["head1_b"] += dz1.sum(axis=0)
    d_head_in = dz1 @ params["head1_w"]
    d_gated = d_head_in[:, :_BUNDLE]

    d_bundle = d_gated.copy()
    dgw = np.empty_like(gw)
    for i, sl in enumerate(_BLOCK_SLICES):
        d_bundle[:, sl] *= gw[:, i : i + 1]
        dgw[:, i] = np.sum(d_gated[:, sl] * bundle[:, sl], axis=1)
    dgu = gw * (dgw - np.sum(dgw * gw, axis=1, keepdims=True))
    grads["gate2_w"] += dgu.T @ ga
    grads["gate2_b"] += dgu.sum(axis=0)
    dga = dgu @ params["gate2_w"]
    dgz = dga * (1.0 - ga**2)
    grads["gate1_w"] += dgz.T @ bundle
    grads["gate1_b"] += dgz.sum(axis=0)
    d_bundle += dgz @ params["gate1_w"]

    d_hp2 = d_bundle[:, _BLOCK_SLICES[0]]
    dzp2 = d_hp2 * (1.0 - hp2**2)
    grads["pose2_w"] += dzp2.T @ hp1
    grads["pose2_b"] += dzp2.sum(axis=0)
    d_hp1 = dzp2 @ params["pose2_w"]
    dzp1 = d_hp1 * (1.0 - hp1**2)
    grads["pose1_w"] += dzp1.T @ pose_x
    grads["pose1_b"] += dzp1.sum(axis=0)
    return (
        d_bundle[:, _BLOCK_SLICES[1]],
        d_bundle[:, _BLOCK_SLICES[2]],
    )


def predict_noise(
    pose: Pose,
    t: int,
    total_steps: int,
    mug_cloud: np.ndarray,
    rack_cloud: np.ndarray,
    condition: str,
    params: dict[str, np.ndarray],
) -> NoisePair:
    """Single-example inference; pure function of its inputs."""
    phi_a, _ = _cloud_forward(mug_cloud, params, "mug")
    phi_b, _ = _cloud_forward(rack_cloud, params, "rack")
    out, _ = _forward_batch(
        params,
        pose_features(pose)[None, :],
        phi_a[None, :],
        phi_b[None, :],
        embed_condition(condition)[None, :],
        encode_timestep(t, total_steps)[None, :],
    )
    return NoisePair(out[0, :3], out[0, 3:])


@dataclass
class TrainExample:
    """One training record in normalized workspace units."""

    target: Pose
    mug_cloud: np.ndarray
    rack_cloud: np.ndarray
    condition: str


@dataclass
class TrainConfig:
    steps: int = 4000
    batch_size: int = 16
    lr: float = 0.05
    momentum: float = 0.9
    clip_norm: float = 10.0
    seed: int = 0
    # Step-wise decay: multiply lr by the factor once each listed fraction
    # of total steps has elapsed.
    decay_at: tuple[float, ...] = (0.6, 0.85)
    decay_factor: float = 0.3

    def lr_at(self, step: int) -> float:
        lr = self.lr
        for frac in self.decay_at:
            if step >= frac * self.steps:
                lr *= self.decay_factor
        return lr


def _smooth_l1_batch(pred: np.ndarray, target: np.ndarray):
    """Mean Smooth-L1 over a (B, 6) batch and its gradient."""
    diff = pred - target
    a = np.abs(diff)
    per = np.where(a < 1.0, 0.5 * diff**2, a - 0.5)
    loss = float(per.mean())
    grad = np.where(a < 1.0, diff, np.sign(diff)) / per.size
    return loss, grad


def loss_and_grads(
    params: dict[str, np.ndarray],
    pose_x: np.ndarray,
    t_enc: np.ndarray,
    cond_vecs: np.ndarray,
    clouds_mug: list[np.ndarray],
    clouds_rack: list[np.ndarray],
    mug_idx: np.ndarray,
    rack_idx: np.ndarray,
    targets: np.ndarray,
):
    """Loss and analytic gradients for one minibatch.

    Clouds are passed as unique arrays plus per-example indices so each
    distinct cloud is encoded (and back-propagated) once.
    """
    grads = {k: np.zeros_like(v) for k, v in params.items()}
    mug_feats, mug_caches = zip(
        *[_cloud_forward(c, params, "mug") for c in clouds_mug]
    )
    rack_feats, rack_caches = zip(
        *[_cloud_forward(c, params, "rack") for c in clouds_rack]
    )
    phi_a = np.stack(mug_feats)[mug_idx]
    phi_b = np.stack(rack_feats)[rack_idx]
    out, cache = _forward_batch(params, pose_x, phi_a, phi_b, cond_vecs, t_enc)
    loss, d_out = _smooth_l1_batch(out, targets)
    d_phi_a, d_phi_b = _backward_batch(d_out, cache, params, grads)
    for j, c_cache in enumerate(mug_caches):
        d_sum = d_phi_a[mug_idx == j].sum(axis=0)
        _cloud_backward(d_sum, c_cache, params, "mug", grads)
    for j, c_cache in enumerate(rack_caches):
        d_sum = d_phi_b[rack_idx == j].sum(axis=0)
        _cloud_backward(d_sum, c_cache, params, "rack", grads)
    return loss, grads


def _unique_clouds(examples: list[TrainExample], attr: str):
    clouds: list[np.ndarray] = []
    index = np.zeros(len(examples), dtype=int)
    for i, ex in enumerate(examples):
        cloud = getattr(ex, attr)
        for j, seen in enumerate(clouds):
            if seen is cloud or (seen.shape == cloud.shape and np.array_equal(seen, cloud)):
                index[i] = j
                break
        else:
            clouds.append(cloud)
            index[i] = len(clouds) - 1
    return clouds, index


def train(
    examples: list[TrainExample],
    sched: NoiseSchedule,
    config: TrainConfig,
    tables: TableCache | None = None,
) -> tuple[dict[str, np.ndarray], list[float]]:
    """Minibatch momentum SGD on the noise-prediction objective.

    Per step and example: sample t uniformly, noise the clean target pose
    through the forward chains, and regress the drawn noise. Returns the
    trained parameters and the per-step loss curve. Aborts with a
    diagnostic if the loss diverges past 1e3.
    """
    if not examples:
        raise ValueError("training requires a non-empty dataset")
    if tables is None:
        tables = TableCache()
    rng = np.random.default_rng(config.seed)
    params = init_params(rng)
    velocity = {k: np.zeros_like(v) for k, v in params.items()}
    clouds_mug, mug_index = _unique_clouds(examples, "mug_cloud")
    clouds_rack, rack_index = _unique_clouds(examples, "rack_cloud")
    cond_all = np.stack([embed_condition(ex.condition) for ex in examples])
    losses: list[float] = []

    for step in range(config.steps):
        picks = rng.integers(0, len(examples), config.batch_size)
        ts = rng.integers(0, sched.steps, config.batch_size)
        pose_x = np.empty((config.batch_size, POSE_DIM))
        targets = np.empty((config.batch_size, 6))
        t_enc = np.empty((config.batch_size, TIME_FEAT))
        for row, (pick, t) in enumerate(zip(picks, ts)):
            ex = examples[pick]
            trans, eps_t = forward_translation(
                ex.target.translation, int(t), sched, rng
            )
            rot, eps_r = forward_rotation(
                ex.target.rotation, int(t), sched, tables, rng
            )
            pose_x[row] = np.concatenate([rot.ravel(), trans])
            targets[row, :3] = eps_r
            targets[row, 3:] = eps_t
            t_enc[row] = encode_timestep(int(t), sched.steps)
        loss, grads = loss_and_grads(
            params,
            pose_x,
            t_enc,
            cond_all[picks],
            clouds_mug,
            clouds_rack,
            mug_index[picks],
            rack_index[picks],
            targets,
        )
        if not np.isfinite(loss) or loss > 1e3:
            raise RuntimeError(
                f"training diverged at step {step}: loss={loss!r} "
                f"(lr={config.lr}, batch={config.batch_size})"
            )
        losses.append(loss)
        total_norm = np.sqrt(sum(float(np.sum(g**2)) for g in grads.values()))
        scale = 1.0
        if total_norm > config.clip_norm:
            scale = config.clip_norm / total_norm
        lr = config.lr_at(step)
        for k in params:
            velocity[k] = config.momentum * velocity[k] - lr * scale * grads[k]
            params[k] += velocity[k]
    return params, losses


# ---------------------------------------------------------------------------
# trained model wrapper and checkpoints


@dataclass
class Denoiser:
    """Trained noise predictor plus everything needed to run it."""

    params: dict[str, np.ndarray]
    sched: NoiseSchedule
    norm_offset: np.ndarray
    norm_scale: float
    registry_ids: tuple[str, ...] = field(
        default_factory=lambda: tuple(condition_registry())
    )

    def predict(
        self,
        pose: Pose,
        t: int,
        mug_cloud: np.ndarray,
        rack_cloud: np.ndarray,
        condition: str,
    ) -> NoisePair:
        return predict_noise(
            pose, t, self.sched.steps, mug_cloud, rack_cloud, condition, self.params
        )

    def bind(self, mug_cloud: np.ndarray, rack_cloud: np.ndarray, condition: str):
        """Precompute the cloud and condition features for one scene."""
        phi_a, _ = _cloud_forward(mug_cloud, self.params, "mug")
        phi_b, _ = _cloud_forward(rack_cloud, self.params, "rack")
        phi_l = embed_condition(condition)
        return _BoundDenoiser(self, phi_a, phi_b, phi_l)


@dataclass
class _BoundDenoiser:
    base: Denoiser
    phi_a: np.ndarray
    phi_b: np.ndarray
    phi_l: np.ndarray

    def predict(self, pose, t, mug_cloud=None, rack_cloud=None, condition=None):
        out, _ = _forward_batch(
            self.base.params,
            pose_features(pose)[None, :],
            self.phi_a[None, :],
            self.phi_b[None, :],
            self.phi_l[None, :],
            encode_timestep(t, self.base.sched.steps)[None, :],
        )
        return NoisePair(out[0, :3], out[0, 3:])


CHECKPOINT_VERSION = 1


def save_checkpoint(
    path,
    params: dict[str, np.ndarray],
    sched_meta: dict,
    norm_offset: np.ndarray,
    norm_scale: float,
) -> None:
    """Write a self-contained checkpoint (npz with a JSON meta record)."""
    registry = condition_registry()
    meta = {
        "version": CHECKPOINT_VERSION,
        "schedule": sched_meta,
        "norm_scale": float(norm_scale),
        "registry_ids": list(registry),
        "param_names": sorted(params),
        "param_shapes": {k: list(params[k].shape) for k in sorted(params)},
    }
    arrays = {f"param_{k}": v for k, v in params.items()}
    arrays["registry_vecs"] = np.stack([registry[k] for k in registry])
    arrays["norm_offset"] = np.asarray(norm_offset, dtype=float)
    arrays["meta_json"] = np.array(json.dumps(meta, sort_keys=True))
    # Write through a handle so the exact path is honored (np.savez would
    # append .npz to a bare filename).
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path) -> Denoiser:
    with np.load(path, allow_pickle=False) as blob:
        meta = json.loads(str(blob["meta_json"]))
        if meta["version"] != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta['version']}")
        params = {k: blob[f"param_{k}"] for k in meta["param_names"]}
        norm_offset = blob["norm_offset"]
        stored = blob["registry_vecs"]
    registry = condition_registry()
    expected = np.stack([registry[k] for k in meta["registry_ids"]])
    if not np.array_equal(stored, expected):
        raise ValueError("checkpoint condition registry mismatch")
    sm = meta["schedule"]
    sched = make_schedule(sm["steps"], sm["beta_min"], sm["beta_max"])
    return Denoiser(
        params=params,
        sched=sched,
        norm_offset=norm_offset,
        norm_scale=meta["norm_scale"],
        registry_ids=tuple(meta["registry_ids"]),
    )
