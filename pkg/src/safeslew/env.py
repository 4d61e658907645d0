"""Episodic reorientation environment with a curriculum scenario sampler.

Observations are flat 16-vectors with fixed layout:

    [0:4]   error quaternion (scalar-first, scalar >= 0)
    [4:7]   body angular rate (rad/s)
    [7:10]  boresight unit vector in the body frame
    [10]    cone margin angle theta - theta_F (rad)
    [11]    angle theta between boresight and avoid direction (rad)
    [12:15] unit body-frame direction from boresight toward the avoid vector
    [15]    error-quaternion scalar at the previous step

Episodes are fixed-horizon: `step` reports truncation at the final step and
never terminates early. Without a keep-out zone the three cone-dependent
entries take the values theta = pi, margin = pi, direction = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .cbf import SafetyFilterParams, filter_torque
from .dynamics import InertiaMatrix, RigidBodyState, step_zoh
from .keepout import KeepOutZone, delta_n_body, theta_and_margin
from .quatmath import (
    error_angle,
    error_quaternion,
    from_axis_angle,
    qmul,
    random_unit_vector,
    rotate_to_inertial,
)
from .reward import RewardInputs, RewardParams, reward_step

OBS_DIM = 16
OBS_QE = slice(0, 4)
OBS_OMEGA = slice(4, 7)
OBS_BORESIGHT = slice(7, 10)
OBS_THETA_MARGIN = 10
OBS_THETA = 11
OBS_DELTA_N = slice(12, 15)
OBS_QE0_PREV = 15

DEFAULT_BORESIGHT = np.array([1.0, 0.0, 0.0])
DEFAULT_TAU_MAX = np.array([2.0, 2.0, 2.0])


class NotResetError(RuntimeError):
    """step() called before reset()."""


class EpisodeOverError(RuntimeError):
    """step() called after the episode was truncated."""


@dataclass
class EpisodeConfig:
    duration: float = 100.0
    dt: float = 0.1
    inertia: InertiaMatrix = field(default_factory=InertiaMatrix.default)
    tau_max: np.ndarray = field(default_factory=lambda: DEFAULT_TAU_MAX.copy())
    zone: Optional[KeepOutZone] = None
    target: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    initial: RigidBodyState = field(
        default_factory=lambda: RigidBodyState(np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(3))
    )
    reward_params: RewardParams = field(default_factory=RewardParams)
    filter_enabled: bool = False
    filter_params: SafetyFilterParams = field(default_factory=SafetyFilterParams)
    boresight: np.ndarray = field(default_factory=lambda: DEFAULT_BORESIGHT.copy())

    def __post_init__(self) -> None:
        steps = self.duration / self.dt
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError(f"duration/dt must be an integer step count, got {steps}")

    @property
    def horizon(self) -> int:
        return int(round(self.duration / self.dt))


@dataclass
class CurriculumSpec:
    """Scenario distribution for one curriculum phase."""

    phase: int
    max_dev: float
    min_dev: float
    zone_half_angle_range: tuple[float, float] = (math.radians(15.0), math.radians(30.0))
    zone_path_fraction_range: tuple[float, float] = (0.25, 0.75)
    omega_init_bound: float = math.radians(0.001)  # rad/s, per axis

    def __post_init__(self) -> None:
        if self.phase not in (1, 2):
            raise ValueError(f"phase must be 1 or 2, got {self.phase}")
        if not self.min_dev < self.max_dev <= math.pi + 1e-12:
            raise ValueError("need min_dev < max_dev <= pi")

    @classmethod
    def phase_one(cls, max_dev: float) -> "CurriculumSpec":
        return cls(phase=1, max_dev=max_dev, min_dev=0.0)

    @classmethod
    def phase_two(cls, max_dev: float = math.pi, min_dev: float = math.radians(80.0)) -> "CurriculumSpec":
        return cls(phase=2, max_dev=max_dev, min_dev=min_dev)


class ReorientEnv:
    """Single-episode environment around one EpisodeConfig.

    One instance is single-threaded (mutable episode state); run
    independent instances for parallel episodes.
    """

    def __init__(self, config: EpisodeConfig):
        self.config = config
        self._state: Optional[RigidBodyState] = None
        self._steps = 0
        self._truncated = False
        self._tau_prev = np.zeros(3)
        self._q_e0_prev = 1.0

    def reset(self, seed: int | None = None) -> np.ndarray:
        """Restore the configured initial state and return the first observation.

        The configured scenario is deterministic; `seed` is accepted for
        interface parity with samplers that construct the config.
        """
        del seed
        self._state = self.config.initial.copy()
        self._steps = 0
        self._truncated = False
        self._tau_prev = np.zeros(3)
        q_e = error_quaternion(self._state.q, self.config.target)
        self._q_e0_prev = float(q_e[0])
        return self._observe(q_e)

    def step(self, action: np.ndarray) -> tuple[np.ndarray, float, bool, bool, dict]:
        """Apply an action in [-1, 1]^3, advance one control period."""
        if self._state is None:
            raise NotResetError("reset() must be called before step()")
        if self._truncated:
            raise EpisodeOverError("episode is over; call reset()")
        cfg = self.config
        action = np.clip(np.asarray(action, dtype=float), -1.0, 1.0)
        tau = action * cfg.tau_max
        branch = None
        if cfg.filter_enabled and cfg.zone is not None:
            outcome = filter_torque(self._state, cfg.zone, cfg.inertia, tau, cfg.filter_params)
            tau = outcome.tau_safe
            branch = outcome.branch

        self._state = step_zoh(self._state, tau, cfg.inertia, cfg.dt)
        self._steps += 1
        self._truncated = self._steps >= cfg.horizon

        q_e = error_quaternion(self._state.q, cfg.target)
        phi = error_angle(q_e)
        if cfg.zone is not None:
            _, margin = theta_and_margin(self._state.q, cfg.zone)
            margin_for_reward = margin
        else:
            margin = math.pi
            margin_for_reward = math.inf

        reward = reward_step(
            RewardInputs(
                phi=phi,
                q_e0_now=float(q_e[0]),
                q_e0_prev=self._q_e0_prev,
                tau=tau,
                tau_prev=self._tau_prev,
                tau_max=cfg.tau_max,
                theta_margin=margin_for_reward,
            ),
            cfg.reward_params,
        )

        obs = self._observe(q_e)
        info = {
            "theta_margin": margin,
            "phi": phi,
            "violation": margin <= 0.0,
            "filter_branch": branch,
            "tau_applied": tau,
        }
        self._q_e0_prev = float(q_e[0])
        self._tau_prev = tau
        return obs, reward, False, self._truncated, info

    @property
    def state(self) -> RigidBodyState:
        if self._state is None:
            raise NotResetError("reset() must be called first")
        return self._state

    def _observe(self, q_e: np.ndarray) -> np.ndarray:
        cfg = self.config
        obs = np.empty(OBS_DIM)
        obs[OBS_QE] = q_e
        obs[OBS_OMEGA] = self._state.omega
        if cfg.zone is not None:
            obs[OBS_BORESIGHT] = cfg.zone.r_body
            theta, margin = theta_and_margin(self._state.q, cfg.zone)
            obs[OBS_THETA_MARGIN] = margin
            obs[OBS_THETA] = theta
            dn, _ = delta_n_body(self._state.q, cfg.zone)
            obs[OBS_DELTA_N] = dn
        else:
            obs[OBS_BORESIGHT] = cfg.boresight
            obs[OBS_THETA_MARGIN] = math.pi
            obs[OBS_THETA] = math.pi
            obs[OBS_DELTA_N] = 0.0
        obs[OBS_QE0_PREV] = self._q_e0_prev
        return obs


def sample_scenario(
    spec: CurriculumSpec, seed: int, base: EpisodeConfig | None = None
) -> EpisodeConfig:
    """Draw one episode configuration from the curriculum distribution.

    Phase one randomizes the initial attitude error only. Phase two also
    places a keep-out cone with its center on the great-circle arc between
    the initial and target boresight directions, rejecting geometries where
    either endpoint would fall inside the cone (after 100 rejected attempts
    the placement band widens to every admissible fraction).
    """
    base = base if base is not None else EpisodeConfig()
    rng = np.random.default_rng(seed)

    if spec.phase == 1:
        axis = random_unit_vector(rng)
        dev = rng.uniform(spec.min_dev, spec.max_dev)
        q_init = qmul(base.target, from_axis_angle(axis, dev))
        omega0 = rng.uniform(-spec.omega_init_bound, spec.omega_init_bound, 3)
        return replace(
            base,
            zone=None,
            initial=RigidBodyState(q=q_init, omega=omega0, t=0.0),
        )

    r_target = rotate_to_inertial(base.target, base.boresight)
    lo_frac, hi_frac = spec.zone_path_fraction_range
    attempts = 0
    while True:
        attempts += 1
        if attempts > 10_000:
            raise RuntimeError("could not place a keep-out zone on the boresight arc")
        axis = random_unit_vector(rng)
        dev = rng.uniform(spec.min_dev, spec.max_dev)
        q_init = qmul(base.target, from_axis_angle(axis, dev))
        r_init = rotate_to_inertial(q_init, base.boresight)
        cross = np.cross(r_init, r_target)
        sin_arc = np.linalg.norm(cross)
        arc = math.atan2(sin_arc, float(r_init @ r_target))
        if arc < 1e-8 or sin_arc < 1e-12:
            continue  # boresight stationary or endpoints antipodal
        half = rng.uniform(*spec.zone_half_angle_range)
        if attempts <= 100:
            frac = rng.uniform(lo_frac, hi_frac)
        else:
            f_lo = max(lo_frac, half / arc)
            f_hi = min(hi_frac, 1.0 - half / arc)
            if f_lo >= f_hi:
                continue
            frac = rng.uniform(f_lo, f_hi)
        if frac * arc <= half or (1.0 - frac) * arc <= half:
            continue
        k = cross / sin_arc
        beta = frac * arc
        n_center = r_init * math.cos(beta) + np.cross(k, r_init) * math.sin(beta)
        zone = KeepOutZone.create(n_center, base.boresight, half)
        omega0 = rng.uniform(-spec.omega_init_bound, spec.omega_init_bound, 3)
        return replace(
            base,
            zone=zone,
            initial=RigidBodyState(q=q_init, omega=omega0, t=0.0),
        )
