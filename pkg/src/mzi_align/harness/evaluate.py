"""Greedy evaluation with full trajectory logging, and the bit-exact
replay verifier."""

from __future__ import annotations

import time
from pathlib import Path
from typing import Callable

import numpy as np

from ..action_space import raw_to_physical
from ..env import InterferometerEnv
from ..td3 import select_action
from .config import AppConfig
from .metrics import EvalSummary, frame_visibility, summarize
from .trajlog import TrajectoryRecord, TrajectoryWriter, draws_digest, read_trajectories


class ReplayMismatch(RuntimeError):
    def __init__(self, episode: int, step: int, field: str, logged, replayed):
        self.episode = episode
        self.step = step
        self.field = field
        super().__init__(
            f"replay diverged at episode {episode} step {step}: "
            f"{field} logged {logged!r} vs replayed {replayed!r}"
        )


def _episode_seed(base_seed: int, episode: int) -> int:
    return int(np.random.SeedSequence([base_seed, episode]).generate_state(1, np.uint64)[0] >> 1)


def run_evaluation(policy: Callable[[np.ndarray], np.ndarray], cfg: AppConfig,
                   episodes: int, base_seed: int, log_path,
                   checkpoint_digest: str = "-") -> EvalSummary:
    """Run greedy episodes, logging one record per step.

    `policy` maps an observation to a raw action in [-1, 1]^5; the logged
    physical action always equals raw_to_physical(raw).
    """
    env = InterferometerEnv(cfg.env)
    bounds = cfg.env.bounds
    records = []
    started = time.monotonic()
    header = {
        "config_digest": cfg.digest(),
        "base_seed": base_seed,
        "episodes": episodes,
        "obs_mode": cfg.env.obs_mode,
        "checkpoint_digest": checkpoint_digest,
    }
    with TrajectoryWriter(log_path, header) as writer:
        for ep in range(episodes):
            obs, info = env.reset(seed=_episode_seed(base_seed, ep))
            done = False
            while not done:
                ctrl_before = env.control_state.values.tolist()
                raw = np.asarray(policy(obs), dtype=float)
                res = env.step(raw_to_physical(raw, bounds))
                vis_frames = frame_visibility(*env.beams(),
                                              n_phases=cfg.harness.sweep_phases)
                rec = TrajectoryRecord(
                    episode=ep,
                    step=res.info["step"] - 1 if not res.info["terminated_unsafe"]
                    else res.info["step"],
                    ctrl_before=ctrl_before,
                    ctrl_after=env.control_state.values.tolist(),
                    raw_action=raw.tolist(),
                    physical_action=raw_to_physical(raw, bounds).tolist(),
                    reward=res.reward,
                    visibility=res.info["visibility_noiseless"],
                    visibility_frames=vis_frames,
                    done=res.done,
                    terminated_unsafe=res.info["terminated_unsafe"],
                    draws_digest=draws_digest(env.last_draws),
                    timestamp=time.time(),
                )
                writer.write(rec)
                records.append(rec)
                obs = res.observation
                done = res.done
    return summarize(records, horizon=cfg.env.horizon,
                     thresholds=tuple(cfg.harness.thresholds),
                     wall_seconds=time.monotonic() - started)


def policy_from_checkpoint(path):
    from ..nn_core import load_actor

    actor = load_actor(path)
    rng = np.random.default_rng(0)  # unused at sigma = 0

    def policy(obs: np.ndarray) -> np.ndarray:
        return select_action(actor, obs, 0.0, rng)

    return policy


def replay(log_path, cfg: AppConfig) -> int:
    """Re-execute a trajectory log and verify bit-exact reproduction.

    Feeds the logged raw actions through a fresh environment seeded from the
    log header and compares rewards, visibilities and control states.
    Returns the number of verified records; raises ReplayMismatch on the
    first divergence.
    """
    header, records = read_trajectories(log_path)
    if header.get("config_digest") != cfg.digest():
        raise ReplayMismatch(-1, -1, "config_digest", header.get("config_digest"), cfg.digest())
    env = InterferometerEnv(cfg.env)
    bounds = cfg.env.bounds
    base_seed = header["base_seed"]
    current_ep = None
    verified = 0
    for rec in records:
        if rec.episode != current_ep:
            current_ep = rec.episode
            env.reset(seed=_episode_seed(base_seed, current_ep))
        res = env.step(raw_to_physical(np.asarray(rec.raw_action), bounds))
        vis_frames = frame_visibility(*env.beams(), n_phases=cfg.harness.sweep_phases)
        checks = (
            ("reward", rec.reward, res.reward),
            ("visibility", rec.visibility, res.info["visibility_noiseless"]),
            ("visibility_frames", rec.visibility_frames, vis_frames),
            ("ctrl_after", rec.ctrl_after, env.control_state.values.tolist()),
            ("done", rec.done, res.done),
            ("terminated_unsafe", rec.terminated_unsafe, res.info["terminated_unsafe"]),
        )
        for name, logged, replayed in checks:
            if logged != replayed:
                raise ReplayMismatch(rec.episode, rec.step, name, logged, replayed)
        verified += 1
    return verified
