"""Newline-delimited JSON front end exposing the environment to trainers.

One session drives one environment, strictly request-response; every
response echoes a monotonically increasing sequence number. Malformed
input yields an error response and leaves the session usable, so an
arbitrary byte stream can never crash or wedge the server.

Requests:
    {"cmd": "spec"}
    {"cmd": "reset", "seed": int, "phase": 1|2, "max_dev_deg": number,
     "min_dev_deg": number (optional), "filter": bool (optional)}
    {"cmd": "step", "action": [a, b, c]}
    {"cmd": "close"}

The safety filter defaults to off for training sessions; the reset flag
turns it on for filtered-training experiments.
"""

from __future__ import annotations

import json
import math
import socket
import sys
from dataclasses import replace
from typing import Optional

from .env import (
    CurriculumSpec,
    EpisodeConfig,
    EpisodeOverError,
    NotResetError,
    ReorientEnv,
    sample_scenario,
)


class EnvSession:
    """Protocol state machine for one client."""

    def __init__(self, base: EpisodeConfig | None = None):
        self.base = base if base is not None else EpisodeConfig()
        self.env: Optional[ReorientEnv] = None
        self.seq = 0
        self.closed = False

    def handle_line(self, line: str) -> str:
        self.seq += 1
        try:
            response = self._dispatch(line)
        except Exception:  # protocol survives anything a message can throw
            response = {"error": "internal"}
        response["seq"] = self.seq
        return json.dumps(response)

    def _dispatch(self, line: str) -> dict:
        try:
            msg = json.loads(line)
        except (json.JSONDecodeError, UnicodeDecodeError):
            return {"error": "parse"}
        if not isinstance(msg, dict) or not isinstance(msg.get("cmd"), str):
            return {"error": "bad_request"}
        cmd = msg["cmd"]
        if cmd == "spec":
            return {
                "obs_dim": 16,
                "act_dim": 3,
                "act_low": -1,
                "act_high": 1,
                "dt": self.base.dt,
                "horizon": self.base.horizon,
            }
        if cmd == "reset":
            return self._reset(msg)
        if cmd == "step":
            return self._step(msg)
        if cmd == "close":
            self.closed = True
            return {"ok": True}
        return {"error": "unknown_cmd"}

    def _reset(self, msg: dict) -> dict:
        try:
            seed = int(msg.get("seed", 0))
            phase = int(msg.get("phase", 1))
            max_dev = math.radians(float(msg.get("max_dev_deg", 180.0)))
            filt = bool(msg.get("filter", False))
            if phase == 1:
                min_dev = math.radians(float(msg.get("min_dev_deg", 0.0)))
                spec = CurriculumSpec(phase=1, max_dev=max_dev, min_dev=min_dev)
            else:
                min_dev = math.radians(float(msg.get("min_dev_deg", 80.0)))
                spec = CurriculumSpec(phase=2, max_dev=max_dev, min_dev=min_dev)
        except (TypeError, ValueError):
            return {"error": "bad_request"}
        base = replace(self.base, filter_enabled=filt)
        config = sample_scenario(spec, seed, base)
        self.env = ReorientEnv(config)
        obs = self.env.reset()
        return {"obs": [float(x) for x in obs]}

    def _step(self, msg: dict) -> dict:
        if self.env is None:
            return {"error": "not_reset"}
        action = msg.get("action")
        if (
            not isinstance(action, list)
            or len(action) != 3
            or not all(isinstance(a, (int, float)) and math.isfinite(a) for a in action)
        ):
            return {"error": "bad_action"}
        try:
            obs, reward, terminated, truncated, info = self.env.step(action)
        except NotResetError:
            return {"error": "not_reset"}
        except EpisodeOverError:
            return {"error": "episode_over"}
        return {
            "obs": [float(x) for x in obs],
            "reward": float(reward),
            "terminated": terminated,
            "truncated": truncated,
            "info": {
                "theta_margin": float(info["theta_margin"]),
                "phi": float(info["phi"]),
                "violation": bool(info["violation"]),
            },
        }


def serve_stream(instream, outstream, base: EpisodeConfig | None = None) -> None:
    session = EnvSession(base)
    for line in instream:
        if not line.strip():
            continue
        outstream.write(session.handle_line(line) + "\n")
        outstream.flush()
        if session.closed:
            break


def serve_stdio(base: EpisodeConfig | None = None) -> None:
    serve_stream(sys.stdin, sys.stdout, base)


def serve_tcp(host: str, port: int, base: EpisodeConfig | None = None) -> None:
    """Serve exactly one client connection, then return."""
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as srv:
        srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        srv.bind((host, port))
        srv.listen(1)
        conn, _ = srv.accept()
        with conn, conn.makefile("r") as rf, conn.makefile("w") as wf:
            serve_stream(rf, wf, base)
