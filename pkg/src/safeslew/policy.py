"""Action sources: exported MLP inference and an analytic baseline controller.

Trained policies are plain feed-forward networks stored as JSON (weights
row-major, row count = output dimension), evaluated deterministically:
rectifier hidden activations, tanh on the output so actions land in
(-1, 1)^3. The baseline quaternion-feedback controller exists so every
filter-centric test runs without any trained artifact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .env import OBS_OMEGA, OBS_QE


@dataclass
class MlpPolicy:
    """Ordered (weight, bias) pairs; weight shape (out_dim, in_dim)."""

    layers: list[tuple[np.ndarray, np.ndarray]]
    obs_dim: int = 16
    act_dim: int = 3

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValueError("policy needs at least one layer")
        dim = self.obs_dim
        for i, (w, b) in enumerate(self.layers):
            if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
                raise ValueError(f"layer {i}: weight {w.shape} and bias {b.shape} mismatch")
            if w.shape[1] != dim:
                raise ValueError(f"layer {i}: expected input dim {dim}, got {w.shape[1]}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {i}: weights must be finite")
            dim = w.shape[0]
        if dim != self.act_dim:
            raise ValueError(f"output dim {dim} does not match act_dim {self.act_dim}")


def infer(policy: MlpPolicy, obs: np.ndarray) -> np.ndarray:
    """Deterministic forward pass; tanh keeps every component in (-1, 1)."""
    x = np.asarray(obs, dtype=float)
    last = len(policy.layers) - 1
    for i, (w, b) in enumerate(policy.layers):
        x = w @ x + b
        if i < last:
            np.maximum(x, 0.0, out=x)
    return np.tanh(x)


def save_policy(policy: MlpPolicy, path: str) -> None:
    doc = {
        "layers": [{"w": w.tolist(), "b": b.tolist()} for w, b in policy.layers],
        "activation": "relu",
        "squash": "tanh",
        "obs_dim": policy.obs_dim,
        "act_dim": policy.act_dim,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_policy(path: str) -> MlpPolicy:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("activation") != "relu" or doc.get("squash") != "tanh":
        raise ValueError("unsupported activation/squash combination")
    layers = [
        (np.asarray(layer["w"], dtype=float), np.asarray(layer["b"], dtype=float))
        for layer in doc["layers"]
    ]
    return MlpPolicy(layers=layers, obs_dim=int(doc["obs_dim"]), act_dim=int(doc["act_dim"]))


@dataclass
class BaselineGains:
    """Quaternion-feedback gains: torque = -kp*q_e_vec - kd*omega."""

    kp: float = 4.0
    kd: float = 12.0

    def __post_init__(self) -> None:
        if self.kp <= 0.0 or self.kd <= 0.0:
            raise ValueError("gains must be positive")


def baseline_action(gains: BaselineGains, obs: np.ndarray, tau_max: np.ndarray) -> np.ndarray:
    """Shortest-path quaternion-feedback action, normalized and clamped.

    The upstream error quaternion is canonicalized (scalar >= 0), so the
    feedback always drives the short rotation.
    """
    q_e_vec = obs[OBS_QE][1:]
    omega = obs[OBS_OMEGA]
    tau = -gains.kp * q_e_vec - gains.kd * omega
    return np.clip(tau / np.asarray(tau_max, dtype=float), -1.0, 1.0)
