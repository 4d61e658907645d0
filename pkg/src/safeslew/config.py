"""Run-configuration files: one JSON document, angles in degrees.

The in-memory structures below mirror the file exactly (degrees included)
so a config written by the tool re-reads to an identical structure;
conversion to radians happens only when domain objects are built.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np

from .cbf import SafetyFilterParams
from .dynamics import InertiaMatrix, RigidBodyState
from .env import CurriculumSpec, EpisodeConfig
from .keepout import KeepOutZone
from .reward import RewardParams


class ConfigError(ValueError):
    """Invalid or unreadable run configuration."""


@dataclass
class ZoneFileConfig:
    avoid_direction: list[float]
    half_angle_deg: float


@dataclass
class EpisodeFileConfig:
    duration_s: float = 100.0
    dt_s: float = 0.1
    inertia: list[list[float]] = field(
        default_factory=lambda: [[60.0, 5.0, 1.0], [5.0, 50.0, 2.0], [1.0, 2.0, 70.0]]
    )
    tau_max: list[float] = field(default_factory=lambda: [2.0, 2.0, 2.0])
    boresight: list[float] = field(default_factory=lambda: [1.0, 0.0, 0.0])
    target_attitude: list[float] = field(default_factory=lambda: [1.0, 0.0, 0.0, 0.0])
    initial_attitude: list[float] = field(default_factory=lambda: [1.0, 0.0, 0.0, 0.0])
    initial_rate_deg_s: list[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])
    zone: ZoneFileConfig | None = None


@dataclass
class RewardFileConfig:
    alpha: float = 66.0
    beta: float = 10.0
    accuracy_bonus: float = 9.0
    accuracy_threshold_deg: float = 0.25
    torque_weight: float = 0.05
    torque_change_weight: float = 0.005
    regress_penalty: float = 1.0
    angle_scale_rad: float = 0.14 * 2.0 * math.pi


@dataclass
class FilterFileConfig:
    period_s: float = 0.1
    m2_pos: float = 1.64e-5
    m2_neg: float = -1.64e-5
    m3_pos: float = 6.2e-4
    m3_neg: float = -6.2e-4
    mu: float = 0.0025
    kappa_margin: float = 3.18e-6
    h_margin: float = 3.18e-6
    tau_max: float = 2.0
    solver_tol: float = 1e-9
    ph_form: str = "h_recovering"


@dataclass
class CurriculumFileConfig:
    phase: int = 2
    max_dev_deg: float = 180.0
    min_dev_deg: float = 80.0
    zone_half_angle_range_deg: list[float] = field(default_factory=lambda: [15.0, 30.0])
    zone_path_fraction_range: list[float] = field(default_factory=lambda: [0.25, 0.75])
    omega_init_bound_deg_s: float = 0.001


@dataclass
class RunConfig:
    episode: EpisodeFileConfig = field(default_factory=EpisodeFileConfig)
    reward: RewardFileConfig = field(default_factory=RewardFileConfig)
    filter: FilterFileConfig = field(default_factory=FilterFileConfig)
    curriculum: CurriculumFileConfig = field(default_factory=CurriculumFileConfig)


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    fields = {f for f in cls.__dataclass_fields__}
    unknown = set(data) - fields
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def config_from_dict(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("top level: expected a JSON object")
    unknown = set(doc) - {"episode", "reward", "filter", "curriculum"}
    if unknown:
        raise ConfigError(f"top level: unknown keys {sorted(unknown)}")
    episode_data = dict(doc.get("episode", {}))
    zone_data = episode_data.pop("zone", None) if isinstance(episode_data, dict) else None
    episode = _build(EpisodeFileConfig, episode_data, "episode")
    if zone_data is not None:
        episode.zone = _build(ZoneFileConfig, zone_data, "episode.zone")
    cfg = RunConfig(
        episode=episode,
        reward=_build(RewardFileConfig, doc.get("reward", {}), "reward"),
        filter=_build(FilterFileConfig, doc.get("filter", {}), "filter"),
        curriculum=_build(CurriculumFileConfig, doc.get("curriculum", {}), "curriculum"),
    )
    build_episode_config(cfg)  # validate eagerly: units, shapes, ranges
    build_curriculum(cfg)
    return cfg


def config_to_dict(cfg: RunConfig) -> dict:
    return asdict(cfg)


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(doc)


def save_config(cfg: RunConfig, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2)
        fh.write("\n")


def default_config() -> RunConfig:
    """The bundled example scenario (keep-out cone on a 100-degree slew)."""
    with resources.files("safeslew.configs").joinpath("example_scenario.json").open() as fh:
        return config_from_dict(json.load(fh))


def build_reward_params(cfg: RunConfig) -> RewardParams:
    r = cfg.reward
    try:
        return RewardParams(
            alpha=r.alpha,
            beta=r.beta,
            accuracy_bonus=r.accuracy_bonus,
            accuracy_threshold=math.radians(r.accuracy_threshold_deg),
            torque_weight=r.torque_weight,
            torque_change_weight=r.torque_change_weight,
            regress_penalty=r.regress_penalty,
            angle_scale=r.angle_scale_rad,
        )
    except ValueError as exc:
        raise ConfigError(f"reward: {exc}") from exc


def build_filter_params(cfg: RunConfig) -> SafetyFilterParams:
    f = cfg.filter
    try:
        return SafetyFilterParams(
            period=f.period_s,
            m2_pos=f.m2_pos,
            m2_neg=f.m2_neg,
            m3_pos=f.m3_pos,
            m3_neg=f.m3_neg,
            mu=f.mu,
            kappa_margin=f.kappa_margin,
            h_margin=f.h_margin,
            tau_max=f.tau_max,
            solver_tol=f.solver_tol,
            ph_form=f.ph_form,
        )
    except ValueError as exc:
        raise ConfigError(f"filter: {exc}") from exc


def build_episode_config(cfg: RunConfig, filter_enabled: bool = False) -> EpisodeConfig:
    e = cfg.episode
    try:
        inertia = InertiaMatrix.from_matrix(np.array(e.inertia, dtype=float))
        target = np.array(e.target_attitude, dtype=float)
        initial_q = np.array(e.initial_attitude, dtype=float)
        if target.shape != (4,) or initial_q.shape != (4,):
            raise ValueError("attitudes must have 4 components (scalar first)")
        target = target / np.linalg.norm(target)
        initial_q = initial_q / np.linalg.norm(initial_q)
        omega0 = np.radians(np.array(e.initial_rate_deg_s, dtype=float))
        if omega0.shape != (3,):
            raise ValueError("initial rate must have 3 components")
        zone = None
        if e.zone is not None:
            zone = KeepOutZone.create(
                np.array(e.zone.avoid_direction, dtype=float),
                np.array(e.boresight, dtype=float),
                math.radians(e.zone.half_angle_deg),
            )
        return EpisodeConfig(
            duration=e.duration_s,
            dt=e.dt_s,
            inertia=inertia,
            tau_max=np.array(e.tau_max, dtype=float),
            zone=zone,
            target=target,
            initial=RigidBodyState(q=initial_q, omega=omega0, t=0.0),
            reward_params=build_reward_params(cfg),
            filter_enabled=filter_enabled,
            filter_params=build_filter_params(cfg),
            boresight=np.array(e.boresight, dtype=float),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"episode: {exc}") from exc


def build_curriculum(cfg: RunConfig) -> CurriculumSpec:
    c = cfg.curriculum
    try:
        return CurriculumSpec(
            phase=c.phase,
            max_dev=math.radians(c.max_dev_deg),
            min_dev=math.radians(c.min_dev_deg),
            zone_half_angle_range=(
                math.radians(c.zone_half_angle_range_deg[0]),
                math.radians(c.zone_half_angle_range_deg[1]),
            ),
            zone_path_fraction_range=tuple(c.zone_path_fraction_range),
            omega_init_bound=math.radians(c.omega_init_bound_deg_s),
        )
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"curriculum: {exc}") from exc
