"""Client for the newline-delimited JSON environment protocol.

Speaks to a server over a spawned subprocess's stdio (default) or TCP.
Every request gets exactly one response; an {"error": ...} response or a
closed stream raises.
"""

from __future__ import annotations

import json
import socket
import subprocess
from typing import Optional


class ProtocolError(RuntimeError):
    """Server replied with an error or the connection dropped."""


class ProtocolEnv:
    """One protocol session: spec / reset / step / close."""

    def __init__(self, server_cmd: list[str] | None = None, tcp: tuple[str, int] | None = None):
        self._proc: Optional[subprocess.Popen] = None
        self._sock: Optional[socket.socket] = None
        if tcp is not None:
            self._sock = socket.create_connection(tcp)
            self._reader = self._sock.makefile("r")
            self._writer = self._sock.makefile("w")
        else:
            if server_cmd is None:
                raise ValueError("need server_cmd or tcp address")
            self._proc = subprocess.Popen(
                server_cmd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
            self._reader = self._proc.stdout
            self._writer = self._proc.stdin

    def _request(self, msg: dict) -> dict:
        try:
            self._writer.write(json.dumps(msg) + "\n")
            self._writer.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"server connection lost: {exc}") from exc
        line = self._reader.readline()
        if not line:
            raise ProtocolError("server closed the connection")
        resp = json.loads(line)
        if "error" in resp:
            raise ProtocolError(f"server error: {resp['error']}")
        return resp

    def spec(self) -> dict:
        return self._request({"cmd": "spec"})

    def reset(
        self,
        seed: int,
        phase: int,
        max_dev_deg: float,
        min_dev_deg: float | None = None,
        filter_enabled: bool = False,
    ) -> list[float]:
        msg = {
            "cmd": "reset",
            "seed": int(seed),
            "phase": int(phase),
            "max_dev_deg": float(max_dev_deg),
        }
        if min_dev_deg is not None:
            msg["min_dev_deg"] = float(min_dev_deg)
        if filter_enabled:
            msg["filter"] = True
        return self._request(msg)["obs"]

    def step(self, action) -> tuple[list[float], float, bool, bool, dict]:
        resp = self._request({"cmd": "step", "action": [float(a) for a in action]})
        return (
            resp["obs"],
            float(resp["reward"]),
            bool(resp["terminated"]),
            bool(resp["truncated"]),
            resp["info"],
        )

    def close(self) -> None:
        try:
            if self._writer is not None and not self._writer.closed:
                self._writer.write(json.dumps({"cmd": "close"}) + "\n")
                self._writer.flush()
                self._reader.readline()
        except (BrokenPipeError, OSError, ValueError):
            pass
        if self._proc is not None:
            try:
                self._proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                self._proc.kill()
        if self._sock is not None:
            self._sock.close()

    def __enter__(self) -> "ProtocolEnv":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
