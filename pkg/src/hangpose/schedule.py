"""Noise schedules for the diffusion chains.

``NoiseSchedule`` drives training and generation for both the translation
and rotation chains (they share one schedule). ``AdjustSchedule`` is the
tiny-noise scheduler used by refinement: a constant beta_start = 3e-5 chain
whose single-step forward jitter is applied to translations only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_STEPS = 200
DEFAULT_BETA_MIN = 1e-5
DEFAULT_BETA_MAX = 0.05

ADJUST_BETA_START = 3e-5


@dataclass
class NoiseSchedule:
    """Per-step noise coefficients and the derived cumulative quantities.

    Indexing runs t = 0 .. steps-1 with alpha_bar[0] = alpha[0]. beta_tilde
    holds the reverse posterior variances; beta_tilde[0] is defined as 0.
    """

    steps: int
    beta: np.ndarray
    alpha: np.ndarray = field(init=False)
    alpha_bar: np.ndarray = field(init=False)
    beta_tilde: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.beta = np.asarray(self.beta, dtype=float)
        if self.beta.shape != (self.steps,):
            raise ValueError("beta must have one entry per step")
        if np.any(self.beta <= 0.0) or np.any(self.beta >= 1.0):
            raise ValueError("beta values must lie in (0, 1)")
        self.alpha = 1.0 - self.beta
        self.alpha_bar = np.cumprod(self.alpha)
        prev = np.concatenate([[1.0], self.alpha_bar[:-1]])
        # 0/0 only occurs where alpha_bar rounds to 1 (vanishing noise); the
        # posterior variance there is 0 by continuity.
        with np.errstate(invalid="ignore"):
            self.beta_tilde = (1.0 - prev) / (1.0 - self.alpha_bar) * self.beta
        self.beta_tilde = np.nan_to_num(self.beta_tilde, nan=0.0)
        self.beta_tilde[0] = 0.0


def make_schedule(
    steps: int = DEFAULT_STEPS,
    beta_min: float = DEFAULT_BETA_MIN,
    beta_max: float = DEFAULT_BETA_MAX,
) -> NoiseSchedule:
    """Linear beta schedule from beta_min to beta_max over ``steps`` steps."""
    if steps < 2:
        raise ValueError(f"need at least 2 steps, got {steps}")
    if not (0.0 < beta_min <= beta_max < 1.0):
        raise ValueError(
            f"need 0 < beta_min <= beta_max < 1, got [{beta_min}, {beta_max}]"
        )
    beta = np.linspace(beta_min, beta_max, steps)
    return NoiseSchedule(steps=steps, beta=beta)


@dataclass(frozen=True)
class AdjustSchedule:
    """Refinement jitter schedule: constant beta_start steps.

    ``t_jitter`` forward steps at constant beta give the one-shot retention
    (1 - beta_start)^t_jitter; the default single step adds translation noise
    with standard deviation sqrt(beta_start) ~ 5.5 mm.
    """

    beta_start: float = ADJUST_BETA_START
    t_jitter: int = 1

    def retention(self) -> float:
        """Cumulative signal retention alpha_bar at step t_jitter."""
        return (1.0 - self.beta_start) ** self.t_jitter


def make_adjust_schedule(t_jitter: int = 1) -> AdjustSchedule:
    if t_jitter < 1:
        raise ValueError(f"t_jitter must be >= 1, got {t_jitter}")
    return AdjustSchedule(beta_start=ADJUST_BETA_START, t_jitter=t_jitter)
