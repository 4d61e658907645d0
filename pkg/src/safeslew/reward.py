"""Shaped step reward for reorientation with a keep-out-cone penalty.

The base term rewards attitude convergence exponentially in the error
angle, charges for torque magnitude and torque change, subtracts the cone
penalty, and subtracts a fixed amount whenever the error-quaternion scalar
did not strictly increase. A bonus is added once the error angle is within
the accuracy threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class RewardParams:
    alpha: float = 66.0  # cone-penalty sharpness (1/rad)
    beta: float = 10.0  # cone-penalty magnitude
    accuracy_bonus: float = 9.0
    accuracy_threshold: float = math.radians(0.25)
    torque_weight: float = 0.05
    torque_change_weight: float = 0.005
    regress_penalty: float = 1.0
    angle_scale: float = 0.14 * 2.0 * math.pi  # rad

    def __post_init__(self) -> None:
        if self.alpha <= 0.0 or self.beta <= 0.0:
            raise ValueError("alpha and beta must be positive")
        for name in (
            "accuracy_bonus",
            "accuracy_threshold",
            "torque_weight",
            "torque_change_weight",
            "regress_penalty",
            "angle_scale",
        ):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")


@dataclass
class RewardInputs:
    """Everything the step reward depends on.

    theta_margin may be +inf for episodes without a keep-out zone, making
    the cone penalty exactly zero.
    """

    phi: float
    q_e0_now: float
    q_e0_prev: float
    tau: np.ndarray
    tau_prev: np.ndarray
    tau_max: np.ndarray
    theta_margin: float


def penalty_fzone(theta_margin: float, params: RewardParams) -> float:
    """Cone penalty: flat beta inside the zone, exponential decay outside."""
    if theta_margin <= 0.0:
        return params.beta
    return params.beta * math.exp(-params.alpha * theta_margin)


def reward_step(inputs: RewardInputs, params: RewardParams) -> float:
    tau_max_norm = float(np.linalg.norm(inputs.tau_max))
    if tau_max_norm == 0.0:
        raise ValueError("tau_max must be nonzero")
    r = (
        math.exp(-inputs.phi / params.angle_scale)
        - params.torque_weight * float(np.linalg.norm(inputs.tau)) / tau_max_norm
        - params.torque_change_weight * float(np.linalg.norm(inputs.tau - inputs.tau_prev))
        - penalty_fzone(inputs.theta_margin, params)
    )
    # Strict comparison: equality counts as no progress.
    if not inputs.q_e0_now > inputs.q_e0_prev:
        r -= params.regress_penalty
    if inputs.phi <= params.accuracy_threshold:
        r += params.accuracy_bonus
    return r
