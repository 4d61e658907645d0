"""Batch scenario evaluation: per-episode metrics and summary statistics.

Episodes are embarrassingly parallel. Each episode's RNG stream is derived
from (master_seed, episode_index) alone, so results are bit-identical no
matter how the batch is scheduled or how many workers run it.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Optional, Union

import numpy as np

from .env import CurriculumSpec, EpisodeConfig, ReorientEnv, sample_scenario
from .policy import BaselineGains, MlpPolicy, baseline_action, infer
from .quatmath import error_angle

PolicySource = Union[BaselineGains, MlpPolicy, Callable[[np.ndarray], np.ndarray]]

# Trailing window over which control accuracy is averaged (s).
ACCURACY_WINDOW = 10.0


@dataclass
class EpisodeRecord:
    index: int
    seed: int
    cumulative_reward: float
    settling_time: Optional[float]
    control_effort: float
    control_accuracy: Optional[float]
    violated: bool
    settled: bool
    # Optional per-step traces (None unless collected). State samples have
    # horizon+1 entries including t=0; transition quantities have horizon.
    t: Optional[np.ndarray] = None
    q_e: Optional[np.ndarray] = None
    omega: Optional[np.ndarray] = None
    tau: Optional[np.ndarray] = None
    theta_margin: Optional[np.ndarray] = None
    phi: Optional[np.ndarray] = None
    reward: Optional[np.ndarray] = None
    branch: Optional[list] = None


@dataclass
class BatchSummary:
    n: int
    mean_reward: float
    std_reward: float
    mean_settling_time: Optional[float]
    std_settling_time: Optional[float]
    mean_effort: Optional[float]
    std_effort: Optional[float]
    mean_accuracy: Optional[float]
    std_accuracy: Optional[float]
    rate_non_settled: float
    rate_violation: float


def settling_time(phi_trace: np.ndarray, dt: float, threshold: float) -> Optional[float]:
    """Earliest time after which the error angle stays within the threshold."""
    if threshold <= 0.0:
        raise ValueError("threshold must be positive")
    phi_trace = np.asarray(phi_trace)
    above = np.nonzero(phi_trace > threshold)[0]
    if above.size == 0:
        return 0.0
    k = int(above[-1]) + 1
    if k >= phi_trace.size:
        return None
    return k * dt


def control_effort(tau_trace: np.ndarray, dt: float) -> float:
    """Left-rectangle integral of the squared torque norm (ZOH-consistent)."""
    tau_trace = np.asarray(tau_trace)
    if tau_trace.size == 0:
        return 0.0
    return float(np.sum(tau_trace * tau_trace) * dt)


def policy_action(policy: PolicySource, obs: np.ndarray, tau_max: np.ndarray) -> np.ndarray:
    if isinstance(policy, BaselineGains):
        return baseline_action(policy, obs, tau_max)
    if isinstance(policy, MlpPolicy):
        return infer(policy, obs)
    if callable(policy):
        return np.asarray(policy(obs), dtype=float)
    raise TypeError(f"unsupported policy source {type(policy)!r}")


def run_episode(
    config: EpisodeConfig,
    policy: PolicySource,
    index: int = 0,
    seed: int = 0,
    collect_trace: bool = False,
) -> EpisodeRecord:
    env = ReorientEnv(config)
    obs = env.reset()
    n = config.horizon
    dt = config.dt

    phi = np.empty(n + 1)
    margin = np.empty(n + 1)
    rewards = np.empty(n)
    taus = np.empty((n, 3))
    phi[0] = error_angle(obs[0:4])
    margin[0] = obs[10]
    if collect_trace:
        q_e_tr = np.empty((n + 1, 4))
        omega_tr = np.empty((n + 1, 3))
        branches: Optional[list] = []
        q_e_tr[0] = obs[0:4]
        omega_tr[0] = obs[4:7]
    else:
        q_e_tr = omega_tr = None
        branches = None

    for k in range(n):
        action = policy_action(policy, obs, config.tau_max)
        obs, r, _, _, info = env.step(action)
        phi[k + 1] = info["phi"]
        margin[k + 1] = info["theta_margin"]
        rewards[k] = r
        taus[k] = info["tau_applied"]
        if collect_trace:
            q_e_tr[k + 1] = obs[0:4]
            omega_tr[k + 1] = obs[4:7]
            branches.append(info["filter_branch"])

    threshold = config.reward_params.accuracy_threshold
    settle = settling_time(phi, dt, threshold)
    settled = settle is not None
    window = int(round(ACCURACY_WINDOW / dt))
    accuracy = float(np.mean(phi[-window:])) if settled else None
    record = EpisodeRecord(
        index=index,
        seed=seed,
        cumulative_reward=float(np.sum(rewards)),
        settling_time=settle,
        control_effort=control_effort(taus, dt),
        control_accuracy=accuracy,
        violated=bool(np.min(margin) <= 0.0),
        settled=settled,
    )
    if collect_trace:
        record.t = np.arange(n + 1) * dt
        record.q_e = q_e_tr
        record.omega = omega_tr
        record.tau = taus
        record.theta_margin = margin
        record.phi = phi
        record.reward = rewards
        record.branch = branches
    return record


def episode_seed(master_seed: int, index: int) -> int:
    """Schedule-independent per-episode seed."""
    return int(np.random.SeedSequence((master_seed, index)).generate_state(1)[0])


def _run_indexed(args) -> EpisodeRecord:
    index, master_seed, spec, base, policy, collect = args
    seed = episode_seed(master_seed, index)
    config = sample_scenario(spec, seed, base)
    return run_episode(config, policy, index=index, seed=seed, collect_trace=collect)


def run_batch(
    n: int,
    spec: CurriculumSpec,
    policy: PolicySource,
    filter_enabled: bool,
    master_seed: int,
    base: EpisodeConfig | None = None,
    workers: int = 1,
    collect_traces: bool = False,
) -> tuple[BatchSummary, list[EpisodeRecord]]:
    """Run n independently seeded scenario episodes and summarize them."""
    if n < 1:
        raise ValueError("n must be at least 1")
    base = base if base is not None else EpisodeConfig()
    base = replace(base, filter_enabled=filter_enabled)
    jobs = [(i, master_seed, spec, base, policy, collect_traces) for i in range(n)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_indexed, jobs, chunksize=max(1, n // (4 * workers))))
    else:
        records = [_run_indexed(job) for job in jobs]
    records.sort(key=lambda r: r.index)
    return summary_from_records(records), records


def summary_from_records(records: list[EpisodeRecord]) -> BatchSummary:
    """Aggregate in fixed episode order; starred metrics use settled episodes only."""
    n = len(records)
    rewards = np.array([r.cumulative_reward for r in records])
    settled = np.array([r.settled for r in records])
    violated = np.array([r.violated for r in records])

    def stats(values: list[float]) -> tuple[Optional[float], Optional[float]]:
        if not values:
            return None, None
        arr = np.array(values)
        return float(np.mean(arr)), float(np.std(arr))

    settle_mean, settle_std = stats([r.settling_time for r in records if r.settled])
    effort_mean, effort_std = stats([r.control_effort for r in records if r.settled])
    acc_mean, acc_std = stats([r.control_accuracy for r in records if r.settled])
    return BatchSummary(
        n=n,
        mean_reward=float(np.mean(rewards)),
        std_reward=float(np.std(rewards)),
        mean_settling_time=settle_mean,
        std_settling_time=settle_std,
        mean_effort=effort_mean,
        std_effort=effort_std,
        mean_accuracy=acc_mean,
        std_accuracy=acc_std,
        rate_non_settled=float(np.mean(~settled)),
        rate_violation=float(np.mean(violated)),
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


BATCH_CSV_HEADER = "index,seed,reward,settling_time,effort,accuracy,violated,settled"


def write_batch_csv(records: list[EpisodeRecord], path: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(BATCH_CSV_HEADER + "\n")
        for r in records:
            fh.write(
                ",".join(
                    [
                        str(r.index),
                        str(r.seed),
                        _fmt(r.cumulative_reward),
                        _fmt(r.settling_time),
                        _fmt(r.control_effort),
                        _fmt(r.control_accuracy),
                        _fmt(r.violated),
                        _fmt(r.settled),
                    ]
                )
                + "\n"
            )


def read_batch_csv(path: str) -> list[EpisodeRecord]:
    records = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(
                EpisodeRecord(
                    index=int(row["index"]),
                    seed=int(row["seed"]),
                    cumulative_reward=float(row["reward"]),
                    settling_time=float(row["settling_time"]) if row["settling_time"] else None,
                    control_effort=float(row["effort"]),
                    control_accuracy=float(row["accuracy"]) if row["accuracy"] else None,
                    violated=row["violated"] == "1",
                    settled=row["settled"] == "1",
                )
            )
    return records


TRACE_CSV_HEADER = "t,qe0,qe1,qe2,qe3,wx,wy,wz,taux,tauy,tauz,theta_margin,reward,filter_branch"


def write_trace_csv(record: EpisodeRecord, path: str) -> None:
    """One row per state sample; torque/reward/branch are blank at t=0."""
    if record.t is None:
        raise ValueError("record has no trace; run with collect_trace=True")
    with open(path, "w", newline="") as fh:
        fh.write(TRACE_CSV_HEADER + "\n")
        for k in range(record.t.size):
            cells = [_fmt(record.t[k])]
            cells += [_fmt(v) for v in record.q_e[k]]
            cells += [_fmt(v) for v in record.omega[k]]
            if k == 0:
                cells += ["", "", "", _fmt(record.theta_margin[k]), "", ""]
            else:
                cells += [_fmt(v) for v in record.tau[k - 1]]
                cells.append(_fmt(record.theta_margin[k]))
                cells.append(_fmt(record.reward[k - 1]))
                cells.append(record.branch[k - 1] or "")
            fh.write(",".join(cells) + "\n")


def summary_to_dict(summary: BatchSummary) -> dict:
    def clean(x):
        if x is None or (isinstance(x, float) and math.isnan(x)):
            return None
        return x

    return {
        "n": summary.n,
        "mean_reward": summary.mean_reward,
        "std_reward": summary.std_reward,
        "mean_settling_time": clean(summary.mean_settling_time),
        "std_settling_time": clean(summary.std_settling_time),
        "mean_effort": clean(summary.mean_effort),
        "std_effort": clean(summary.std_effort),
        "mean_accuracy": clean(summary.mean_accuracy),
        "std_accuracy": clean(summary.std_accuracy),
        "rate_non_settled": summary.rate_non_settled,
        "rate_violation": summary.rate_violation,
    }


def write_summary_json(summary: BatchSummary, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(summary_to_dict(summary), fh, indent=2)
        fh.write("\n")
