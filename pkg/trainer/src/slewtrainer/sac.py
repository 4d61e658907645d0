"""Compact soft actor-critic for continuous control.

Matches the common default recipe: twin Q critics with soft-updated
targets, a squashed-gaussian actor, and automatic entropy-temperature
tuning against a target entropy of -act_dim. Networks are two hidden
rectifier layers of 256 units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
HIDDEN = 256


@dataclass
class SacHyperParams:
    batch_size: int = 256
    buffer_size: int = 1_000_000
    gamma: float = 0.99
    learning_rate: float = 1e-4
    tau: float = 0.005  # soft-update coefficient
    learning_starts: int = 1000
    auto_entropy: bool = True
    init_alpha: float = 0.1
    # pointing to fractions of a degree needs a tight noise kernel;
    # None falls back to -act_dim
    target_entropy: float | None = -6.0
    gradient_steps: int = 2
    normalize_obs: bool = True


class ObsNormalizer:
    """Running per-component affine standardization of observations.

    Purely affine (a variance floor instead of clipping), so exported
    policies can fold the final statistics into their first linear layer
    exactly; consumers of the weights file never see the normalizer. Raw
    observations go into the replay buffer; batches are standardized with
    the current statistics when sampled.
    """

    def __init__(self, dim: int, var_floor: float = 1e-4):
        self.mean = np.zeros(dim, dtype=np.float64)
        self.m2 = np.zeros(dim, dtype=np.float64)
        self.count = 0
        self.var_floor = var_floor

    def update(self, obs: np.ndarray) -> None:
        self.count += 1
        delta = obs - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (obs - self.mean)

    @property
    def std(self) -> np.ndarray:
        var = self.m2 / max(1, self.count)
        return np.sqrt(var + self.var_floor)

    def normalize(self, obs: np.ndarray) -> np.ndarray:
        if self.count < 2:
            return np.asarray(obs, dtype=np.float64)
        return (obs - self.mean) / self.std

    def normalize_batch(self, obs: torch.Tensor) -> torch.Tensor:
        if self.count < 2:
            return obs
        mean = torch.as_tensor(self.mean, dtype=obs.dtype)
        std = torch.as_tensor(self.std, dtype=obs.dtype)
        return (obs - mean) / std

    def state(self) -> dict:
        return {"mean": self.mean, "m2": self.m2, "count": self.count}

    def load(self, state: dict) -> None:
        self.mean = np.asarray(state["mean"], dtype=np.float64)
        self.m2 = np.asarray(state["m2"], dtype=np.float64)
        self.count = int(state["count"])


class Actor(nn.Module):
    def __init__(self, obs_dim: int, act_dim: int):
        super().__init__()
        self.body = nn.Sequential(
            nn.Linear(obs_dim, HIDDEN), nn.ReLU(), nn.Linear(HIDDEN, HIDDEN), nn.ReLU()
        )
        self.mu = nn.Linear(HIDDEN, act_dim)
        self.log_std = nn.Linear(HIDDEN, act_dim)

    def forward(self, obs: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        h = self.body(obs)
        return self.mu(h), self.log_std(h).clamp(LOG_STD_MIN, LOG_STD_MAX)

    def sample(self, obs: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Squashed-gaussian action and its log density."""
        mu, log_std = self(obs)
        std = log_std.exp()
        noise = torch.randn_like(mu)
        pre_tanh = mu + std * noise
        action = torch.tanh(pre_tanh)
        log_prob = (-0.5 * (noise**2) - log_std - 0.5 * math.log(2 * math.pi)).sum(-1)
        # change of variables through tanh
        log_prob = log_prob - torch.log1p(-action.pow(2) + 1e-6).sum(-1)
        return action, log_prob

    def deterministic(self, obs: torch.Tensor) -> torch.Tensor:
        mu, _ = self(obs)
        return torch.tanh(mu)


class Critic(nn.Module):
    def __init__(self, obs_dim: int, act_dim: int):
        super().__init__()
        self.q = nn.Sequential(
            nn.Linear(obs_dim + act_dim, HIDDEN),
            nn.ReLU(),
            nn.Linear(HIDDEN, HIDDEN),
            nn.ReLU(),
            nn.Linear(HIDDEN, 1),
        )

    def forward(self, obs: torch.Tensor, act: torch.Tensor) -> torch.Tensor:
        return self.q(torch.cat([obs, act], dim=-1)).squeeze(-1)


class ReplayBuffer:
    def __init__(self, capacity: int, obs_dim: int, act_dim: int):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim), dtype=np.float32)
        self.act = np.zeros((capacity, act_dim), dtype=np.float32)
        self.rew = np.zeros(capacity, dtype=np.float32)
        self.next_obs = np.zeros((capacity, obs_dim), dtype=np.float32)
        self.done = np.zeros(capacity, dtype=np.float32)
        self.pos = 0
        self.size = 0

    def push(self, obs, act, rew, next_obs, done) -> None:
        i = self.pos
        self.obs[i] = obs
        self.act[i] = act
        self.rew[i] = rew
        self.next_obs[i] = next_obs
        self.done[i] = done
        self.pos = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch: int, rng: np.random.Generator) -> tuple[torch.Tensor, ...]:
        idx = rng.integers(0, self.size, batch)
        return (
            torch.from_numpy(self.obs[idx]),
            torch.from_numpy(self.act[idx]),
            torch.from_numpy(self.rew[idx]),
            torch.from_numpy(self.next_obs[idx]),
            torch.from_numpy(self.done[idx]),
        )


class SacAgent:
    def __init__(self, obs_dim: int, act_dim: int, hp: SacHyperParams | None = None):
        self.hp = hp if hp is not None else SacHyperParams()
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.actor = Actor(obs_dim, act_dim)
        self.q1 = Critic(obs_dim, act_dim)
        self.q2 = Critic(obs_dim, act_dim)
        self.q1_target = Critic(obs_dim, act_dim)
        self.q2_target = Critic(obs_dim, act_dim)
        self.q1_target.load_state_dict(self.q1.state_dict())
        self.q2_target.load_state_dict(self.q2.state_dict())
        lr = self.hp.learning_rate
        self.actor_opt = torch.optim.Adam(self.actor.parameters(), lr=lr)
        self.critic_opt = torch.optim.Adam(
            list(self.q1.parameters()) + list(self.q2.parameters()), lr=lr
        )
        self.log_alpha = torch.tensor([math.log(self.hp.init_alpha)], requires_grad=True)
        self.alpha_opt = torch.optim.Adam([self.log_alpha], lr=lr)
        self.target_entropy = (
            self.hp.target_entropy if self.hp.target_entropy is not None else -float(act_dim)
        )
        self.buffer = ReplayBuffer(self.hp.buffer_size, obs_dim, act_dim)
        self.normalizer = ObsNormalizer(obs_dim) if self.hp.normalize_obs else None

    def observe(self, obs: np.ndarray) -> None:
        """Feed one raw observation into the running statistics."""
        if self.normalizer is not None:
            self.normalizer.update(np.asarray(obs, dtype=np.float64))

    @property
    def alpha(self) -> float:
        return float(self.log_alpha.detach().exp())

    def act(self, obs: np.ndarray, deterministic: bool = False) -> np.ndarray:
        if self.normalizer is not None:
            obs = self.normalizer.normalize(np.asarray(obs, dtype=np.float64))
        with torch.no_grad():
            t = torch.as_tensor(np.asarray(obs, dtype=np.float32)).unsqueeze(0)
            if deterministic:
                a = self.actor.deterministic(t)
            else:
                a, _ = self.actor.sample(t)
        return a.squeeze(0).numpy()

    def update(self, rng: np.random.Generator) -> dict:
        hp = self.hp
        obs, act, rew, next_obs, done = self.buffer.sample(hp.batch_size, rng)
        if self.normalizer is not None:
            obs = self.normalizer.normalize_batch(obs).float()
            next_obs = self.normalizer.normalize_batch(next_obs).float()
        alpha = self.log_alpha.exp().detach()

        with torch.no_grad():
            next_act, next_logp = self.actor.sample(next_obs)
            target_q = torch.min(
                self.q1_target(next_obs, next_act), self.q2_target(next_obs, next_act)
            )
            y = rew + hp.gamma * (1.0 - done) * (target_q - alpha * next_logp)

        q1 = self.q1(obs, act)
        q2 = self.q2(obs, act)
        critic_loss = F.mse_loss(q1, y) + F.mse_loss(q2, y)
        self.critic_opt.zero_grad()
        critic_loss.backward()
        self.critic_opt.step()

        new_act, logp = self.actor.sample(obs)
        q_new = torch.min(self.q1(obs, new_act), self.q2(obs, new_act))
        actor_loss = (alpha * logp - q_new).mean()
        self.actor_opt.zero_grad()
        actor_loss.backward()
        self.actor_opt.step()

        if hp.auto_entropy:
            alpha_loss = -(self.log_alpha * (logp.detach() + self.target_entropy)).mean()
            self.alpha_opt.zero_grad()
            alpha_loss.backward()
            self.alpha_opt.step()

        with torch.no_grad():
            for target, online in (
                (self.q1_target, self.q1),
                (self.q2_target, self.q2),
            ):
                for pt, p in zip(target.parameters(), online.parameters()):
                    pt.mul_(1.0 - hp.tau).add_(hp.tau * p)

        return {
            "critic_loss": float(critic_loss.detach()),
            "actor_loss": float(actor_loss.detach()),
            "alpha": self.alpha,
        }

    def state_dict(self) -> dict:
        return {
            "normalizer": self.normalizer.state() if self.normalizer is not None else None,
            "actor": self.actor.state_dict(),
            "q1": self.q1.state_dict(),
            "q2": self.q2.state_dict(),
            "q1_target": self.q1_target.state_dict(),
            "q2_target": self.q2_target.state_dict(),
            "actor_opt": self.actor_opt.state_dict(),
            "critic_opt": self.critic_opt.state_dict(),
            "alpha_opt": self.alpha_opt.state_dict(),
            "log_alpha": self.log_alpha.detach().clone(),
            "obs_dim": self.obs_dim,
            "act_dim": self.act_dim,
        }

    def load_state_dict(self, state: dict) -> None:
        self.actor.load_state_dict(state["actor"])
        self.q1.load_state_dict(state["q1"])
        self.q2.load_state_dict(state["q2"])
        self.q1_target.load_state_dict(state["q1_target"])
        self.q2_target.load_state_dict(state["q2_target"])
        self.actor_opt.load_state_dict(state["actor_opt"])
        self.critic_opt.load_state_dict(state["critic_opt"])
        self.alpha_opt.load_state_dict(state["alpha_opt"])
        with torch.no_grad():
            self.log_alpha.copy_(state["log_alpha"])
        if state.get("normalizer") is not None:
            if self.normalizer is None:
                self.normalizer = ObsNormalizer(self.obs_dim)
            self.normalizer.load(state["normalizer"])
        elif state.get("normalizer") is None and "normalizer" in state:
            self.normalizer = None
