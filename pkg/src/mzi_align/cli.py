"""Command-line harness: train, evaluate, replay, render, serve.

Exit codes: 0 success, 2 configuration error, 3 replay mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_REPLAY_MISMATCH = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mzi-align",
        description="Simulated Mach-Zehnder interferometer alignment toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, default=None, help="YAML config file")
        p.add_argument("--preset", default="default", help="config preset name")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="SECTION.KEY=VALUE", help="config override")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--obs-mode", choices=["frames", "vector"], default=None)
        p.add_argument("--randomization", default=None,
                       help="on, off, or no-<name> ablation")

    p_train = sub.add_parser("train", help="run the TD3 training loop")
    common(p_train)
    p_train.add_argument("--out", type=Path, default=None, help="output directory")

    p_eval = sub.add_parser("evaluate", help="run greedy evaluation episodes")
    common(p_eval)
    p_eval.add_argument("--checkpoint", type=Path, required=False)
    p_eval.add_argument("--episodes", type=int, default=None)
    p_eval.add_argument("--out", type=Path, default=None)

    p_replay = sub.add_parser("replay", help="verify a trajectory log bit-exactly")
    common(p_replay)
    p_replay.add_argument("log", type=Path)

    p_render = sub.add_parser("render", help="render frames for a control state")
    common(p_render)
    p_render.add_argument("--ctrl", default="0,0,0,0,0",
                          help="comma-separated controls (rad, rad, rad, rad, mm)")
    p_render.add_argument("--out", type=Path, default=Path("frames"))

    p_serve = sub.add_parser("serve", help="start the alignment session service")
    common(p_serve)
    p_serve.add_argument("--port", type=int, default=None)
    p_serve.add_argument("--static", type=Path, default=None,
                         help="directory with the console's built assets")

    return parser


def load_app_config(args):
    from .harness.config import apply_override, load_config

    cfg = load_config(args.config, preset=args.preset, overrides=args.overrides)
    if args.obs_mode:
        cfg = apply_override(cfg, f"env.obs_mode={args.obs_mode}")
    if args.seed is not None:
        cfg = apply_override(cfg, f"env.seed={args.seed}")
    if args.randomization:
        from dataclasses import fields

        from .harness.config import AppConfig
        from .randomization import config_from_name

        rand = config_from_name(args.randomization)
        cfg = AppConfig(**{**{f.name: getattr(cfg, f.name) for f in fields(AppConfig)},
                           "randomization": rand})
    return cfg


def cmd_train(args) -> int:
    from .env import InterferometerEnv
    from .td3 import train

    cfg = load_app_config(args)
    out = args.out or Path(cfg.harness.out_dir) / "train"
    seed = args.seed if args.seed is not None else cfg.env.seed
    result = train(lambda: InterferometerEnv(cfg.env), cfg.network, cfg.train,
                   seed=seed, out_dir=out)
    print(json.dumps({
        "checkpoint": str(result.checkpoint_path),
        "log": str(result.log_path),
        "episodes": result.episodes,
        "critic_updates": result.critic_updates,
        "final_eval": result.final_eval,
        "wall_seconds": round(result.wall_seconds, 1),
    }, indent=2))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from .harness.evaluate import policy_from_checkpoint, run_evaluation

    cfg = load_app_config(args)
    episodes = args.episodes or cfg.harness.eval_episodes
    seed = args.seed if args.seed is not None else cfg.env.seed
    out = args.out or Path(cfg.harness.out_dir) / "eval"
    out.mkdir(parents=True, exist_ok=True)
    if not args.checkpoint:
        print("evaluate requires --checkpoint", file=sys.stderr)
        return EXIT_CONFIG
    policy = policy_from_checkpoint(args.checkpoint)
    summary = run_evaluation(policy, cfg, episodes=episodes, base_seed=seed,
                             log_path=out / "trajectories.jsonl")
    (out / "summary.json").write_text(json.dumps(summary.to_dict(), indent=2))
    print(json.dumps({
        "episodes": summary.episodes,
        "final_visibility_mean": summary.final_visibility_mean,
        "final_visibility_std": summary.final_visibility_std,
        "unsafe_rate": summary.unsafe_rate,
        "time_to_threshold": summary.time_to_threshold,
        "log": str(out / "trajectories.jsonl"),
        "summary": str(out / "summary.json"),
    }, indent=2))
    return EXIT_OK


def cmd_replay(args) -> int:
    from .harness.evaluate import ReplayMismatch, replay

    cfg = load_app_config(args)
    try:
        n = replay(args.log, cfg)
    except ReplayMismatch as exc:
        print(f"replay mismatch: {exc}", file=sys.stderr)
        return EXIT_REPLAY_MISMATCH
    print(f"replay verified: {n} records reproduced bit-exactly")
    return EXIT_OK


def cmd_render(args) -> int:
    import base64

    import numpy as np

    from .beam_optics import visibility_analytic
    from .env import ControlState, derive_beams, render_observation
    from .harness.metrics import frame_visibility
    from .harness.service import frames_to_png_b64
    from .randomization import draw_step

    cfg = load_app_config(args)
    try:
        values = np.array([float(x) for x in args.ctrl.split(",")])
        ctrl = ControlState(values)
    except ValueError as exc:
        print(f"bad --ctrl: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    upper, lower = derive_beams(ctrl, cfg.geometry, cfg.geometry.nominal_radius)
    draws = draw_step(np.random.default_rng(cfg.env.seed), cfg.randomization,
                      cfg.env.frames_per_obs)
    frames = render_observation(upper, lower, draws, cfg.env)
    args.out.mkdir(parents=True, exist_ok=True)
    for i, png in enumerate(frames_to_png_b64(frames)):
        (args.out / f"frame_{i:02d}.png").write_bytes(base64.b64decode(png))
    meta = {
        "control_state": values.tolist(),
        "visibility_analytic": visibility_analytic(upper, lower),
        "visibility_frames": frame_visibility(upper, lower,
                                              n_phases=cfg.harness.sweep_phases),
        "frames": int(frames.shape[0]),
    }
    (args.out / "meta.json").write_text(json.dumps(meta, indent=2))
    print(json.dumps(meta, indent=2))
    return EXIT_OK


def cmd_serve(args) -> int:
    from .harness.service import serve

    cfg = load_app_config(args)
    static = args.static
    if static is None:
        candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        static = candidate if candidate.is_dir() else None
    serve(cfg, port=args.port, static_dir=static)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    from .harness.config import ConfigError

    handlers = {
        "train": cmd_train,
        "evaluate": cmd_evaluate,
        "replay": cmd_replay,
        "render": cmd_render,
        "serve": cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
