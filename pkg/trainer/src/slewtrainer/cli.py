"""Trainer command line: train against a server, export checkpoints."""

from __future__ import annotations

import argparse
import json
import shlex
import sys

import torch

from .protocol_env import ProtocolEnv, ProtocolError
from .sac import SacHyperParams
from .train import Stage, TrainingPlan, default_plan, export_weights, train

DEFAULT_SERVER_CMD = "safeslew serve --transport stdio"


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="slewtrainer")
    sub = parser.add_subparsers(required=True)

    tr = sub.add_parser("train", help="run a curriculum training plan")
    tr.add_argument("--plan", default=None, help="plan JSON (default: built-in two-phase plan)")
    tr.add_argument("--server-cmd", default=DEFAULT_SERVER_CMD)
    tr.add_argument("--tcp", default=None, help="host:port of a running server (overrides --server-cmd)")
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--checkpoint", default="checkpoint.pt")
    tr.add_argument("--export", default=None, help="also export policy weights JSON here")
    tr.add_argument("--threads", type=int, default=2)
    tr.set_defaults(func=cmd_train)

    ex = sub.add_parser("export", help="export policy weights from a checkpoint")
    ex.add_argument("--checkpoint", required=True)
    ex.add_argument("--out", required=True)
    ex.set_defaults(func=cmd_export)
    args = parser.parse_args(argv)
    return args.func(args)


def _plan_from_file(path: str) -> TrainingPlan:
    with open(path) as fh:
        doc = json.load(fh)
    stages = [
        Stage(
            phase=int(s["phase"]),
            max_dev_deg=float(s["max_dev_deg"]),
            steps=int(s["steps"]),
            min_dev_deg=float(s["min_dev_deg"]) if s.get("min_dev_deg") is not None else None,
        )
        for s in doc["stages"]
    ]
    hp = SacHyperParams(**doc.get("hyperparams", {}))
    return TrainingPlan(
        stages=stages,
        hp=hp,
        seed=int(doc.get("seed", 0)),
        checkpoint_every=int(doc.get("checkpoint_every", 50_000)),
        checkpoint_path=doc.get("checkpoint_path", "checkpoint.pt"),
    )


def cmd_train(args) -> int:
    torch.set_num_threads(args.threads)
    plan = _plan_from_file(args.plan) if args.plan else default_plan()
    plan.seed = args.seed
    plan.checkpoint_path = args.checkpoint
    if args.tcp:
        host, _, port = args.tcp.partition(":")
        env = ProtocolEnv(tcp=(host, int(port)))
    else:
        env = ProtocolEnv(server_cmd=shlex.split(args.server_cmd))
    try:
        agent, returns = train(plan, env)
    except ProtocolError as exc:
        print(f"error: {exc} (checkpoint saved to {plan.checkpoint_path})", file=sys.stderr)
        return 1
    finally:
        env.close()
    print(f"trained {len(returns)} episodes; checkpoint at {plan.checkpoint_path}")
    if args.export:
        export_weights(agent, args.export)
        print(f"exported weights to {args.export}")
    return 0


def cmd_export(args) -> int:
    try:
        export_weights(args.checkpoint, args.out)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"exported weights to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
