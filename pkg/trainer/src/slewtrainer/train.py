"""Staged curriculum training loop and policy export.

A plan is an ordered list of stages, each pinning the scenario phase, the
deviation-angle cap, and an environment-step budget. One agent and one
replay buffer persist across stages, so later stages fine-tune earlier
ones. Checkpoints carry the agent, its optimizers, and the filled part of
the buffer; a server disconnect checkpoints before propagating.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import torch

from .protocol_env import ProtocolEnv, ProtocolError
from .sac import ReplayBuffer, SacAgent, SacHyperParams


@dataclass
class Stage:
    phase: int
    max_dev_deg: float
    steps: int
    min_dev_deg: float | None = None


@dataclass
class TrainingPlan:
    stages: list[Stage]
    hp: SacHyperParams = field(default_factory=SacHyperParams)
    seed: int = 0
    checkpoint_every: int = 50_000
    checkpoint_path: str = "checkpoint.pt"


def default_plan() -> TrainingPlan:
    """Two-phase schedule: widen deviations without zones, then add zones."""
    return TrainingPlan(
        stages=[
            Stage(phase=1, max_dev_deg=25.0, steps=200_000),
            Stage(phase=1, max_dev_deg=90.0, steps=200_000),
            Stage(phase=1, max_dev_deg=180.0, steps=200_000),
            Stage(phase=2, max_dev_deg=120.0, steps=100_000),
            Stage(phase=2, max_dev_deg=180.0, steps=100_000),
        ]
    )


def save_checkpoint(agent: SacAgent, path: str, episode_returns: list[float]) -> None:
    buf = agent.buffer
    torch.save(
        {
            "agent": agent.state_dict(),
            "hp": agent.hp,
            "episode_returns": episode_returns,
            "buffer": {
                "obs": buf.obs[: buf.size],
                "act": buf.act[: buf.size],
                "rew": buf.rew[: buf.size],
                "next_obs": buf.next_obs[: buf.size],
                "done": buf.done[: buf.size],
                "pos": buf.pos,
                "size": buf.size,
                "capacity": buf.capacity,
            },
        },
        path,
    )


def load_checkpoint(path: str) -> tuple[SacAgent, list[float]]:
    state = torch.load(path, weights_only=False)
    agent_state = state["agent"]
    agent = SacAgent(agent_state["obs_dim"], agent_state["act_dim"], state["hp"])
    agent.load_state_dict(agent_state)
    b = state["buffer"]
    buf = ReplayBuffer(b["capacity"], agent.obs_dim, agent.act_dim)
    n = b["size"]
    buf.obs[:n] = b["obs"]
    buf.act[:n] = b["act"]
    buf.rew[:n] = b["rew"]
    buf.next_obs[:n] = b["next_obs"]
    buf.done[:n] = b["done"]
    buf.pos = b["pos"]
    buf.size = n
    agent.buffer = buf
    return agent, list(state["episode_returns"])


def train(
    plan: TrainingPlan,
    env: ProtocolEnv,
    agent: SacAgent | None = None,
    log_every: int = 10,
) -> tuple[SacAgent, list[float]]:
    """Run the plan against one protocol session; returns episode returns.

    Raises ProtocolError (after an emergency checkpoint) if the server
    goes away mid-run.
    """
    torch.manual_seed(plan.seed)
    rng = np.random.default_rng(plan.seed)
    spec = env.spec()
    if agent is None:
        agent = SacAgent(spec["obs_dim"], spec["act_dim"], plan.hp)
    episode_returns: list[float] = []
    global_step = 0
    episode_idx = 0
    try:
        for stage in plan.stages:
            obs = np.asarray(
                env.reset(
                    seed=plan.seed + episode_idx,
                    phase=stage.phase,
                    max_dev_deg=stage.max_dev_deg,
                    min_dev_deg=stage.min_dev_deg,
                ),
                dtype=np.float32,
            )
            agent.observe(obs)
            episode_idx += 1
            ep_return = 0.0
            for _ in range(stage.steps):
                if global_step < plan.hp.learning_starts:
                    action = rng.uniform(-1.0, 1.0, agent.act_dim)
                else:
                    action = agent.act(obs)
                next_obs, reward, terminated, truncated, _ = env.step(action)
                next_obs = np.asarray(next_obs, dtype=np.float32)
                agent.observe(next_obs)
                ep_return += reward
                # fixed-horizon episodes: bootstrap through truncation
                agent.buffer.push(obs, action, reward, next_obs, float(terminated))
                obs = next_obs
                global_step += 1
                if agent.buffer.size >= plan.hp.learning_starts:
                    for _ in range(plan.hp.gradient_steps):
                        agent.update(rng)
                if terminated or truncated:
                    episode_returns.append(ep_return)
                    if log_every and len(episode_returns) % log_every == 0:
                        tail = episode_returns[-log_every:]
                        print(
                            f"step {global_step}: episode {len(episode_returns)}, "
                            f"mean return {np.mean(tail):.1f}",
                            flush=True,
                        )
                    obs = np.asarray(
                        env.reset(
                            seed=plan.seed + episode_idx,
                            phase=stage.phase,
                            max_dev_deg=stage.max_dev_deg,
                            min_dev_deg=stage.min_dev_deg,
                        ),
                        dtype=np.float32,
                    )
                    episode_idx += 1
                    ep_return = 0.0
                if plan.checkpoint_every and global_step % plan.checkpoint_every == 0:
                    save_checkpoint(agent, plan.checkpoint_path, episode_returns)
    except ProtocolError:
        save_checkpoint(agent, plan.checkpoint_path, episode_returns)
        raise
    save_checkpoint(agent, plan.checkpoint_path, episode_returns)
    return agent, episode_returns


def export_weights(agent_or_checkpoint: SacAgent | str, path: str) -> None:
    """Write the actor's deterministic head in the runtime's JSON format.

    Only the mean head survives export; the stochastic spread is a
    training-time device. Observation standardization, being affine, is
    folded exactly into the first layer, so the file stands alone. Refuses
    actors that are not the expected 16 -> 256 -> 256 -> 3 chain.
    """
    if isinstance(agent_or_checkpoint, str):
        agent, _ = load_checkpoint(agent_or_checkpoint)
    else:
        agent = agent_or_checkpoint
    actor = agent.actor
    arrays = [
        (
            w.detach().numpy().astype(np.float64),
            b.detach().numpy().astype(np.float64),
        )
        for w, b in [
            (actor.body[0].weight, actor.body[0].bias),
            (actor.body[2].weight, actor.body[2].bias),
            (actor.mu.weight, actor.mu.bias),
        ]
    ]
    shapes = [w.shape for w, _ in arrays]
    if shapes != [(256, 16), (256, 256), (3, 256)]:
        raise ValueError(f"actor architecture {shapes} is not 16->256->256->3")
    if agent.normalizer is not None and agent.normalizer.count >= 2:
        # (x - m)/s into layer 1: W' = W/s (per column), b' = b - W (m/s)
        w0, b0 = arrays[0]
        s = agent.normalizer.std
        m = agent.normalizer.mean
        arrays[0] = (w0 / s[None, :], b0 - w0 @ (m / s))
    doc = {
        "layers": [{"w": w.tolist(), "b": b.tolist()} for w, b in arrays],
        "activation": "relu",
        "squash": "tanh",
        "obs_dim": agent.obs_dim,
        "act_dim": agent.act_dim,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
