"""Secondary acceptance: training pipeline liveness and desk-scale learning."""

import json
import subprocess
import sys

import numpy as np
import pytest
import torch

from slewtrainer.protocol_env import ProtocolEnv
from slewtrainer.sac import SacHyperParams
from slewtrainer.train import Stage, TrainingPlan, export_weights, load_checkpoint, train

SERVER_CMD = [sys.executable, "-m", "safeslew.cli", "serve", "--transport", "stdio"]


def _report(name, detail=""):
    print(f"[ACCEPTANCE] PASS {name}" + (f" ({detail})" if detail else ""))


def _train(tmp_path, steps, seed=0):
    torch.set_num_threads(2)
    plan = TrainingPlan(
        stages=[Stage(phase=1, max_dev_deg=25.0, steps=steps)],
        hp=SacHyperParams(),
        seed=seed,
        checkpoint_every=0,
        checkpoint_path=str(tmp_path / "checkpoint.pt"),
    )
    env = ProtocolEnv(server_cmd=SERVER_CMD)
    try:
        agent, returns = train(plan, env, log_every=10)
    finally:
        env.close()
    return agent, returns, plan.checkpoint_path


def _settle_rate(weights_path, tmp_path, episodes=50):
    """Evaluate via the runtime's own Monte Carlo command."""
    from safeslew.config import config_to_dict, default_config

    doc = config_to_dict(default_config())
    doc["curriculum"] = {
        "phase": 1,
        "max_dev_deg": 25.0,
        "min_dev_deg": 0.0,
        "zone_half_angle_range_deg": [15.0, 30.0],
        "zone_path_fraction_range": [0.25, 0.75],
        "omega_init_bound_deg_s": 0.001,
    }
    cfg_path = tmp_path / "eval_config.json"
    cfg_path.write_text(json.dumps(doc))
    out = tmp_path / "eval"
    subprocess.run(
        [
            sys.executable, "-m", "safeslew.cli", "montecarlo",
            "--config", str(cfg_path), "--policy", str(weights_path),
            "-n", str(episodes), "--filter", "off", "--seed", "321",
            "--workers", "2", "--out", str(out),
        ],
        check=True,
        timeout=1200,
    )
    summary = json.loads((out / "summary.json").read_text())
    return 1.0 - summary["rate_non_settled"]


def test_pipeline_smoke_5k(tmp_path):
    # 5k steps end to end: train, checkpoint, export, runtime loads with
    # inference parity within 1e-5 on 100 observations
    from safeslew.policy import infer, load_policy

    agent, returns, ckpt = _train(tmp_path, steps=5000)
    assert len(returns) == 5  # 5k steps at a 1000-step horizon
    loaded, _ = load_checkpoint(ckpt)
    weights = tmp_path / "weights.json"
    export_weights(loaded, str(weights))
    policy = load_policy(str(weights))
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(100):
        obs = rng.standard_normal(16)
        theirs = infer(policy, obs)
        mine = loaded.act(obs, deterministic=True)
        worst = max(worst, float(np.max(np.abs(theirs - mine))))
    assert worst <= 1e-5
    _report("trainer pipeline smoke", f"episodes={len(returns)}, parity={worst:.1e}")


def test_desk_scale_learning_100k(tmp_path):
    # 100k-step phase-one run: exported policy settles at least 70% of 50
    # fresh 25-degree-deviation episodes, and the reward curve rose
    agent, returns, _ = _train(tmp_path, steps=100_000, seed=7)
    assert len(returns) == 100
    first = float(np.mean(returns[:10]))
    last = float(np.mean(returns[-10:]))
    assert last > first
    weights = tmp_path / "weights.json"
    export_weights(agent, str(weights))
    rate = _settle_rate(weights, tmp_path, episodes=50)
    assert rate >= 0.70
    _report(
        "desk-scale learning",
        f"settle_rate={rate:.2f}, returns {first:.0f} -> {last:.0f}",
    )
