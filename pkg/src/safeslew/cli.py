"""Operator command line: single simulations, Monte Carlo batches, filter
diagnostics, and the environment server.

All commands are deterministic under a fixed --seed. Angles in config
files are degrees; state vectors passed on the command line are raw
(quaternion components and rad/s).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace

import numpy as np

from . import envserver
from .cbf import (
    SafetyFilterParams,
    filter_torque,
    h_value,
    kappa_dot,
    p_h,
    p_kappa,
)
from .config import (
    ConfigError,
    RunConfig,
    build_curriculum,
    build_episode_config,
    build_filter_params,
    config_to_dict,
    default_config,
    load_config,
    save_config,
)
from .dynamics import RigidBodyState
from .keepout import kappa
from .montecarlo import (
    run_batch,
    run_episode,
    summary_to_dict,
    write_batch_csv,
    write_summary_json,
    write_trace_csv,
)
from .policy import BaselineGains, load_policy


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="safeslew")
    sub = parser.add_subparsers(required=True)

    sim = sub.add_parser("simulate", help="run one episode and export its trace")
    _add_common(sim)
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--svg", action="store_true", help="also write a line-chart SVG")
    sim.set_defaults(func=cmd_simulate)

    mc = sub.add_parser("montecarlo", help="run a batch of sampled scenarios")
    _add_common(mc)
    mc.add_argument("-n", type=int, required=True, help="number of episodes")
    mc.add_argument("--mu", type=float, default=None, help="override the barrier parameter")
    mc.add_argument("--workers", type=int, default=1)
    mc.add_argument("--traces", action="store_true", help="write per-episode trace CSVs")
    mc.add_argument("--out", required=True)
    mc.set_defaults(func=cmd_montecarlo)

    fc = sub.add_parser("filter-check", help="evaluate the safety filter at one state")
    fc.add_argument("--config", default=None)
    fc.add_argument(
        "--state",
        required=True,
        help="q0,q1,q2,q3,wx,wy,wz (quaternion scalar-first, rates rad/s)",
    )
    fc.add_argument("--tau", required=True, help="x,y,z torque to test (N m)")
    fc.set_defaults(func=cmd_filter_check)

    sv = sub.add_parser("serve", help="serve the environment protocol")
    sv.add_argument("--config", default=None)
    sv.add_argument("--transport", choices=["stdio", "tcp"], default="stdio")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=7785)
    sv.set_defaults(func=cmd_serve)

    cfg = sub.add_parser("write-config", help="write the default config to a file")
    cfg.add_argument("--out", required=True)
    cfg.set_defaults(func=cmd_write_config)
    return parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="JSON run configuration (default: bundled)")
    p.add_argument("--policy", default=None, help="policy weights JSON")
    p.add_argument("--baseline", action="store_true", help="use the quaternion-feedback baseline")
    p.add_argument("--kp", type=float, default=4.0)
    p.add_argument("--kd", type=float, default=12.0)
    p.add_argument("--filter", choices=["on", "off"], default="on")
    p.add_argument("--seed", type=int, default=0)


def _load(args) -> RunConfig:
    return load_config(args.config) if args.config else default_config()


def _policy(args):
    if args.policy:
        try:
            return load_policy(args.policy)
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot load policy {args.policy}: {exc}") from exc
    return BaselineGains(kp=args.kp, kd=args.kd)


def cmd_simulate(args) -> int:
    cfg = _load(args)
    policy = _policy(args)
    episode = build_episode_config(cfg, filter_enabled=args.filter == "on")
    os.makedirs(args.out, exist_ok=True)
    record = run_episode(episode, policy, seed=args.seed, collect_trace=True)
    write_trace_csv(record, os.path.join(args.out, "trace.csv"))
    summary = {
        "cumulative_reward": record.cumulative_reward,
        "settling_time": record.settling_time,
        "control_effort": record.control_effort,
        "control_accuracy": record.control_accuracy,
        "violated": record.violated,
        "settled": record.settled,
        "final_phi_deg": math.degrees(float(record.phi[-1])),
        "min_theta_margin_deg": math.degrees(float(np.min(record.theta_margin))),
    }
    with open(os.path.join(args.out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    if args.svg:
        _write_episode_svg(record, os.path.join(args.out, "plot.svg"))
    print(f"wrote {args.out}/trace.csv and summary.json (violated={record.violated})")
    return 0


def cmd_montecarlo(args) -> int:
    cfg = _load(args)
    if args.n < 1:
        raise ConfigError("-n must be at least 1")
    policy = _policy(args)
    base = build_episode_config(cfg)
    if args.mu is not None:
        try:
            base = replace(base, filter_params=replace(base.filter_params, mu=args.mu))
        except ValueError as exc:
            raise ConfigError(f"--mu: {exc}") from exc
    spec = build_curriculum(cfg)
    os.makedirs(args.out, exist_ok=True)
    summary, records = run_batch(
        args.n,
        spec,
        policy,
        filter_enabled=args.filter == "on",
        master_seed=args.seed,
        base=base,
        workers=args.workers,
        collect_traces=args.traces,
    )
    write_batch_csv(records, os.path.join(args.out, "batch.csv"))
    write_summary_json(summary, os.path.join(args.out, "summary.json"))
    if args.traces:
        for rec in records:
            write_trace_csv(rec, os.path.join(args.out, f"trace_{rec.index:05d}.csv"))
    print(_format_summary(summary))
    return 0


def _format_summary(s) -> str:
    def pm(mean, std, fmt="{:.2f}"):
        if mean is None:
            return "n/a"
        return f"{fmt.format(mean)} +/- {fmt.format(std)}"

    acc = "n/a"
    if s.mean_accuracy is not None:
        acc = f"{math.degrees(s.mean_accuracy):.2f} +/- {math.degrees(s.std_accuracy):.2f}"
    lines = [
        f"episodes                      {s.n}",
        f"mean reward                   {pm(s.mean_reward, s.std_reward)}",
        f"mean settling time* (s)       {pm(s.mean_settling_time, s.std_settling_time)}",
        f"mean control effort* (N^2m^2s) {pm(s.mean_effort, s.std_effort)}",
        f"mean control accuracy* (deg)  {acc}",
        f"rate of non-settled           {100.0 * s.rate_non_settled:.2f}%",
        f"rate of violation             {100.0 * s.rate_violation:.2f}%",
        "* non-settled samples excluded",
    ]
    return "\n".join(lines)


def _parse_floats(text: str, count: int, what: str) -> np.ndarray:
    try:
        values = np.array([float(x) for x in text.split(",")])
    except ValueError as exc:
        raise ConfigError(f"{what}: {exc}") from exc
    if values.size != count:
        raise ConfigError(f"{what}: expected {count} comma-separated numbers")
    return values


def cmd_filter_check(args) -> int:
    cfg = load_config(args.config) if args.config else default_config()
    episode = build_episode_config(cfg)
    if episode.zone is None:
        raise ConfigError("filter-check requires a config with a keep-out zone")
    params: SafetyFilterParams = episode.filter_params
    raw = _parse_floats(args.state, 7, "--state")
    q = raw[:4]
    norm = np.linalg.norm(q)
    if norm < 1e-12:
        raise ConfigError("--state: quaternion part must be nonzero")
    state = RigidBodyState(q=q / norm, omega=raw[4:], t=0.0)
    tau = _parse_floats(args.tau, 3, "--tau")

    zone, inertia = episode.zone, episode.inertia
    kap = kappa(state.q, zone)
    kd = kappa_dot(state, zone)
    h = h_value(state, zone, params)
    pk = p_kappa(state, zone, inertia, tau, params.period, params)
    ph = p_h(state, zone, inertia, tau, params.period, params)
    member = (
        bool(np.all(np.abs(tau) <= params.tau_max))
        and pk <= -params.kappa_margin
        and ph <= -params.h_margin
    )
    outcome = filter_torque(state, zone, inertia, tau, params)
    print(f"kappa      = {kap:.12g}")
    print(f"kappa_dot  = {kd:.12g}")
    print(f"h          = {h:.12g}")
    print(f"p_kappa(T) = {pk:.12g}")
    print(f"p_h(T)     = {ph:.12g}")
    print(f"member     = {member}")
    print(f"tau_safe   = {outcome.tau_safe[0]:.12g},{outcome.tau_safe[1]:.12g},{outcome.tau_safe[2]:.12g}")
    print(f"branch     = {outcome.branch}")
    return 0


def cmd_serve(args) -> int:
    cfg = load_config(args.config) if args.config else default_config()
    base = build_episode_config(cfg)
    try:
        if args.transport == "stdio":
            envserver.serve_stdio(base)
        else:
            envserver.serve_tcp(args.host, args.port, base)
    except OSError as exc:
        print(f"error: transport failure: {exc}", file=sys.stderr)
        return 1
    return 0


def cmd_write_config(args) -> int:
    save_config(default_config(), args.out)
    print(f"wrote {args.out}")
    return 0


def _write_episode_svg(record, path: str) -> None:
    phi_deg = np.degrees(record.phi)
    margin_deg = np.degrees(record.theta_margin)
    panels = [
        ("attitude error angle (deg)", record.t, phi_deg, False),
        ("cone margin angle (deg)", record.t, margin_deg, True),
    ]
    with open(path, "w") as fh:
        fh.write(_render_svg(panels))


def _render_svg(panels) -> str:
    width, height, pad = 720, 240, 45
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height * len(panels)}" font-family="monospace" font-size="11">'
    ]
    for idx, (label, t, y, zero_line) in enumerate(panels):
        top = idx * height
        x0, x1 = pad, width - 10
        y0, y1 = top + height - 30, top + 15
        tmin, tmax = float(t[0]), float(t[-1])
        ymin, ymax = float(np.min(y)), float(np.max(y))
        if zero_line:
            ymin = min(ymin, 0.0)
        if ymax - ymin < 1e-12:
            ymax = ymin + 1.0

        def sx(v):
            return x0 + (v - tmin) / (tmax - tmin) * (x1 - x0)

        def sy(v):
            return y0 - (v - ymin) / (ymax - ymin) * (y0 - y1)

        parts.append(
            f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" '
            'fill="white" stroke="black"/>'
        )
        if zero_line and ymin <= 0.0 <= ymax:
            parts.append(
                f'<line x1="{x0}" y1="{sy(0.0):.2f}" x2="{x1}" y2="{sy(0.0):.2f}" '
                'stroke="red" stroke-dasharray="4 3"/>'
            )
        pts = " ".join(f"{sx(tv):.2f},{sy(yv):.2f}" for tv, yv in zip(t, y))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="blue"/>')
        parts.append(f'<text x="{x0}" y="{y1 - 4}">{label}</text>')
        parts.append(f'<text x="{x0}" y="{y0 + 14}">{tmin:.0f}</text>')
        parts.append(f'<text x="{x1 - 40}" y="{y0 + 14}">{tmax:.0f} s</text>')
        parts.append(f'<text x="4" y="{sy(ymax):.0f}">{ymax:.2f}</text>')
        parts.append(f'<text x="4" y="{sy(ymin):.0f}">{ymin:.2f}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


if __name__ == "__main__":
    sys.exit(main())
