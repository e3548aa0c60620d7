"""Pose-decoupled diffusion: normal chain on translations, isotropic
Gaussian chain on rotations.

Forward noising draws the one-shot marginal at step t; the reverse step
estimates the clean pose from predicted noise, composes the posterior mean
(geodesic flows for the rotation), and perturbs with the posterior variance
except at the final step, which is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import so3
from .igso3 import TableCache, sample_rotation, sample_shifted
from .schedule import NoiseSchedule


@dataclass
class Pose:
    """Rigid transform: 3x3 rotation plus 3-vector translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self) -> None:
        self.rotation = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        self.translation = np.asarray(self.translation, dtype=float).reshape(3)

    def copy(self) -> "Pose":
        return Pose(self.rotation.copy(), self.translation.copy())

    def validate(self, translation_bound: float = 4.0) -> None:
        """Raise ValueError if the pose violates its invariants."""
        if not so3.is_rotation(self.rotation):
            raise ValueError("rotation is not orthonormal with det +1")
        if not np.all(np.isfinite(self.translation)):
            raise ValueError("translation is not finite")
        if np.linalg.norm(self.translation) > translation_bound:
            raise ValueError(
                f"translation norm {np.linalg.norm(self.translation):.3f} exceeds "
                f"sanity bound {translation_bound}"
            )

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map points (n, 3) from body frame to world frame."""
        return points @ self.rotation.T + self.translation

    def inverse_apply(self, points: np.ndarray) -> np.ndarray:
        """Map points (n, 3) from world frame to body frame."""
        return (points - self.translation) @ self.rotation


def identity_pose() -> Pose:
    return Pose(np.eye(3), np.zeros(3))


@dataclass
class NoisePair:
    """The 2x3 noise target: rotation axis-angle row and translation row."""

    eps_r: np.ndarray
    eps_t: np.ndarray

    def __post_init__(self) -> None:
        self.eps_r = np.asarray(self.eps_r, dtype=float).reshape(3)
        self.eps_t = np.asarray(self.eps_t, dtype=float).reshape(3)

    def as_array(self) -> np.ndarray:
        return np.stack([self.eps_r, self.eps_t])


@dataclass
class DiffusionStep:
    t: int
    noisy_pose: Pose
    noise: NoisePair


def forward_translation(
    t0: np.ndarray, t: int, sched: NoiseSchedule, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """One-shot forward marginal of the translation at step t.

    Returns (noisy translation, drawn standard-normal noise).
    """
    t0 = np.asarray(t0, dtype=float).reshape(3)
    a_bar = sched.alpha_bar[t]
    eps = rng.standard_normal(3)
    return np.sqrt(a_bar) * t0 + np.sqrt(1.0 - a_bar) * eps, eps


def forward_rotation(
    r0: np.ndarray,
    t: int,
    sched: NoiseSchedule,
    tables: TableCache,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """One-shot forward marginal of the rotation at step t.

    The mean is the geodesic flow of the clean rotation by sqrt(alpha_bar);
    the perturbation g is an isotropic Gaussian draw at concentration
    (1 - alpha_bar). Returns (noisy rotation, log of g).
    """
    a_bar = sched.alpha_bar[t]
    mean = so3.geodesic_flow(np.sqrt(a_bar), r0)
    g = sample_rotation(tables.get(1.0 - a_bar), rng)
    eps_r = so3.log_rotation(g)
    return mean @ g, eps_r


def forward_pose(
    pose0: Pose,
    t: int,
    sched: NoiseSchedule,
    tables: TableCache,
    rng: np.random.Generator,
) -> DiffusionStep:
    """Noise a clean pose to step t; bundles the noise targets."""
    trans, eps_t = forward_translation(pose0.translation, t, sched, rng)
    rot, eps_r = forward_rotation(pose0.rotation, t, sched, tables, rng)
    return DiffusionStep(t=t, noisy_pose=Pose(rot, trans), noise=NoisePair(eps_r, eps_t))


def estimate_clean_rotation(
    r_t: np.ndarray, eps_r: np.ndarray, t: int, sched: NoiseSchedule
) -> np.ndarray:
    """Invert the forward rotation mean given the predicted perturbation."""
    g_inv = so3.exp_rotation(-np.asarray(eps_r, dtype=float))
    return so3.geodesic_flow(1.0 / np.sqrt(sched.alpha_bar[t]), r_t @ g_inv)


def reverse_step(
    pose_t: Pose,
    predicted_noise: NoisePair,
    t: int,
    sched: NoiseSchedule,
    tables: TableCache,
    rng: np.random.Generator,
    posterior_variant: str = "alpha_t",
) -> Pose:
    """One reverse (denoising) step from t to t-1; rejects t = 0.

    ``posterior_variant`` selects the coefficient of the second geodesic
    flow in the rotation posterior mean: "alpha_t" (standard posterior) or
    "alpha_tm1" (the written form with sqrt(alpha_{t-1})).
    """
    if t < 1:
        raise ValueError("reverse_step requires t >= 1")
    if posterior_variant not in ("alpha_t", "alpha_tm1"):
        raise ValueError(f"unknown posterior variant {posterior_variant!r}")

    beta_t = sched.beta[t]
    alpha_t = sched.alpha[t]
    a_bar_t = sched.alpha_bar[t]
    a_bar_prev = sched.alpha_bar[t - 1]
    beta_tilde = sched.beta_tilde[t]

    mean = (1.0 / np.sqrt(alpha_t)) * (
        pose_t.translation - beta_t / np.sqrt(1.0 - a_bar_t) * predicted_noise.eps_t
    )
    if t > 1:
        trans = mean + np.sqrt(beta_tilde) * rng.standard_normal(3)
    else:
        trans = mean

    r0_hat = estimate_clean_rotation(pose_t.rotation, predicted_noise.eps_r, t, sched)
    coeff0 = np.sqrt(a_bar_prev) * beta_t / (1.0 - a_bar_t)
    alpha_coeff = alpha_t if posterior_variant == "alpha_t" else sched.alpha[t - 1]
    coeff_t = np.sqrt(alpha_coeff) * (1.0 - a_bar_prev) / (1.0 - a_bar_t)
    rot_mean = so3.geodesic_flow(coeff0, r0_hat) @ so3.geodesic_flow(
        coeff_t, pose_t.rotation
    )
    if t > 1:
        rot = sample_shifted(rot_mean, tables.get(beta_tilde), rng)
    else:
        rot = rot_mean

    return Pose(rot, trans)


def smooth_l1_loss(predicted: NoisePair, target: NoisePair) -> float:
    """Elementwise Smooth L1 over the six noise components, mean-reduced."""
    resid = np.abs(predicted.as_array() - target.as_array())
    per = np.where(resid < 1.0, 0.5 * resid**2, resid - 0.5)
    return float(np.mean(per))


def smooth_l1_grad(predicted: NoisePair, target: NoisePair) -> np.ndarray:
    """Gradient of smooth_l1_loss with respect to the predicted 2x3 array."""
    diff = predicted.as_array() - target.as_array()
    return np.where(np.abs(diff) < 1.0, diff, np.sign(diff)) / diff.size


class OracleDenoiser:
    """Noise predictor that knows the clean target pose(s).

    Given the current noisy pose it returns exactly the noise that explains
    it under the one-shot forward marginal, so the reverse chain reconstructs
    the bound target. With several targets the nearest (by translation, with
    rotation as tie-breaker) is used, which makes the oracle multi-modal.
    """

    def __init__(self, targets: Pose | list[Pose], sched: NoiseSchedule) -> None:
        if isinstance(targets, Pose):
            targets = [targets]
        if not targets:
            raise ValueError("need at least one target pose")
        self.targets = [p.copy() for p in targets]
        self.sched = sched

    def _nearest(self, pose_t: Pose, t: int) -> Pose:
        if len(self.targets) == 1:
            return self.targets[0]
        a_bar = self.sched.alpha_bar[t]
        best, best_key = None, None
        for cand in self.targets:
            d_t = float(
                np.linalg.norm(pose_t.translation - np.sqrt(a_bar) * cand.translation)
            )
            d_r = so3.geodesic_distance(pose_t.rotation, cand.rotation)
            key = (d_t, d_r)
            if best_key is None or key < best_key:
                best, best_key = cand, key
        return best

    def predict(
        self,
        pose_t: Pose,
        t: int,
        mug_cloud: np.ndarray | None = None,
        rack_cloud: np.ndarray | None = None,
        condition: str | None = None,
    ) -> NoisePair:
        target = self._nearest(pose_t, t)
        a_bar = self.sched.alpha_bar[t]
        eps_t = (pose_t.translation - np.sqrt(a_bar) * target.translation) / np.sqrt(
            1.0 - a_bar
        )
        mean = so3.geodesic_flow(np.sqrt(a_bar), target.rotation)
        eps_r = so3.log_rotation(mean.T @ pose_t.rotation)
        return NoisePair(eps_r, eps_t)


def initial_pose(
    sched: NoiseSchedule, tables: TableCache, rng: np.random.Generator
) -> Pose:
    """Terminal-marginal initialization: N(0, I) translation, near-uniform
    isotropic Gaussian rotation at the last step's concentration."""
    trans = rng.standard_normal(3)
    rot = sample_rotation(tables.get(1.0 - sched.alpha_bar[-1]), rng)
    return Pose(rot, trans)


def sample_target_pose(
    model,
    sched: NoiseSchedule,
    tables: TableCache,
    rng: np.random.Generator,
    mug_cloud: np.ndarray | None = None,
    rack_cloud: np.ndarray | None = None,
    condition: str | None = None,
    posterior_variant: str = "alpha_t",
) -> Pose:
    """Run the full reverse chain from pure noise down to the clean pose.

    ``model`` is anything with a ``predict(pose, t, mug_cloud, rack_cloud,
    condition) -> NoisePair`` method. Deterministic given the rng state.
    """
    pose = initial_pose(sched, tables, rng)
    for t in range(sched.steps - 1, 0, -1):
        predicted = model.predict(pose, t, mug_cloud, rack_cloud, condition)
        pose = reverse_step(
            pose, predicted, t, sched, tables, rng, posterior_variant=posterior_variant
        )
    return pose
