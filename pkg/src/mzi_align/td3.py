"""Twin-delayed deterministic policy-gradient trainer.

Rollouts add Gaussian exploration noise to the raw policy output, the
environment executes the exponentially rescaled action, and the replay
buffer stores the raw action.  Updates regress both critics onto the
twin-minimum smoothed target and ascend the first critic through the actor,
with polyak-averaged target networks.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import torch

from .action_space import ACTION_DIM, rescale, to_physical
from .env import InterferometerEnv
from .nn_core import (
    NetworkSpec,
    TrainingFault,
    build_actor,
    build_critic,
    clip_and_step,
    forward_actor,
    polyak_blend,
    save_checkpoint,
)

__all__ = [
    "TrainConfig",
    "ReplayBuffer",
    "TrainResult",
    "exploration_sigma",
    "select_action",
    "compute_targets",
    "train",
]


@dataclass(frozen=True)
class TrainConfig:
    total_steps: int = 1_000_000
    update_every: int = 10
    batch_size: int = 32
    num_epochs: int = 10
    policy_delay: int = 1
    start_train_step: int = 10_000
    gamma: float = 0.8
    sigma_target: float = 0.2
    noise_clip: float = 0.5
    polyak: float = 0.995
    sigma_explore_start: float = 0.5
    sigma_explore_end: float = 0.02
    sigma_explore_horizon: Optional[int] = None  # defaults to total_steps
    actor_lr: float = 1e-5
    critic_lr: float = 1e-4
    max_grad_norm: float = 10.0
    buffer_capacity: int = 100_000
    rescale_enabled: bool = True
    timeout_bootstrap: bool = False  # True: horizon expiry stores d = 0
    eval_every: int = 10_000
    eval_episodes: int = 5
    keep_best: bool = True  # track the best periodic-eval checkpoint
    checkpoint_every: int = 200_000
    log_every: int = 1_000

    def __post_init__(self):
        if not (0.0 <= self.gamma <= 1.0):
            raise ValueError("gamma must lie in [0, 1]")
        if self.policy_delay < 1 or self.update_every < 1:
            raise ValueError("delays must be >= 1")

    @property
    def explore_horizon(self) -> int:
        return self.sigma_explore_horizon or self.total_steps


def exploration_sigma(cfg: TrainConfig, step: int) -> float:
    """Geometric decay from sigma_start at step 0 to sigma_end at the horizon."""
    h = cfg.explore_horizon
    frac = min(max(step, 0), h) / h
    return cfg.sigma_explore_start * (cfg.sigma_explore_end / cfg.sigma_explore_start) ** frac


class ReplayBuffer:
    """Uniform-sampling ring buffer of (o, a0, r, o', d) transitions.

    Image observations are stored as uint8 (the camera is 8-bit anyway) to
    keep the 1e5-transition buffer in memory; vector observations stay
    float32.
    """

    def __init__(self, capacity: int, obs_shape: tuple, obs_dtype=np.float32):
        self.capacity = capacity
        self._img = len(obs_shape) == 3
        store_dtype = np.uint8 if self._img else obs_dtype
        self.obs = np.empty((capacity, *obs_shape), dtype=store_dtype)
        self.next_obs = np.empty_like(self.obs)
        self.actions = np.empty((capacity, ACTION_DIM), dtype=np.float32)
        self.rewards = np.empty(capacity, dtype=np.float32)
        self.dones = np.empty(capacity, dtype=np.float32)
        self.size = 0
        self._cursor = 0

    def _encode(self, obs: np.ndarray) -> np.ndarray:
        if self._img:
            return np.round(np.asarray(obs) * 255.0).astype(np.uint8)
        return np.asarray(obs, dtype=self.obs.dtype)

    def add(self, obs, action, reward, next_obs, done: float) -> None:
        i = self._cursor
        self.obs[i] = self._encode(obs)
        self.next_obs[i] = self._encode(next_obs)
        self.actions[i] = action
        self.rewards[i] = reward
        self.dones[i] = done
        self._cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, rng: np.random.Generator, batch_size: int):
        if self.size < batch_size:
            raise ValueError(f"buffer holds {self.size} < batch size {batch_size}")
        idx = rng.integers(0, self.size, size=batch_size)
        obs = self.obs[idx].astype(np.float32)
        nxt = self.next_obs[idx].astype(np.float32)
        if self._img:
            obs /= 255.0
            nxt /= 255.0
        return (
            torch.from_numpy(obs),
            torch.from_numpy(self.actions[idx]),
            torch.from_numpy(self.rewards[idx]),
            torch.from_numpy(nxt),
            torch.from_numpy(self.dones[idx]),
        )


def select_action(actor, obs: np.ndarray, sigma: float,
                  rng: np.random.Generator) -> np.ndarray:
    """Raw action clip(pi(o) + eps, -1, 1), eps ~ N(0, sigma^2) per component."""
    with torch.no_grad():
        a0 = forward_actor(actor, torch.as_tensor(obs, dtype=torch.float32))
    a0 = a0.squeeze(0).numpy().astype(np.float64)
    if sigma > 0:
        a0 = a0 + rng.normal(0.0, sigma, size=ACTION_DIM)
    return np.clip(a0, -1.0, 1.0)


def compute_targets(batch, actor_targ, critic1_targ, critic2_targ,
                    cfg: TrainConfig, rng: np.random.Generator) -> torch.Tensor:
    """Smoothed twin-minimum bootstrap targets y = r + gamma (1-d) min Q."""
    _, _, rewards, next_obs, dones = batch
    with torch.no_grad():
        a_next = forward_actor(actor_targ, next_obs)
        eps = rng.normal(0.0, cfg.sigma_target, size=a_next.shape)
        eps = np.clip(eps, -cfg.noise_clip, cfg.noise_clip)
        a_next = torch.clamp(a_next + torch.as_tensor(eps, dtype=torch.float32), -1.0, 1.0)
        q1 = critic1_targ(next_obs, a_next)
        q2 = critic2_targ(next_obs, a_next)
        q = torch.minimum(q1, q2)
        return rewards + cfg.gamma * (1.0 - dones) * q


@dataclass
class TrainResult:
    checkpoint_path: Path
    best_checkpoint_path: Path
    log_path: Path
    env_steps: int
    critic_updates: int
    actor_updates: int
    episodes: int
    final_eval: dict
    best_eval: dict
    wall_seconds: float


def _greedy_episode(actor, env: InterferometerEnv, seed: int,
                    rescale_enabled: bool) -> dict:
    bounds = env.cfg.bounds
    obs, info = env.reset(seed=seed)
    visibilities = []
    unsafe = False
    while True:
        a0 = select_action(actor, obs, 0.0, np.random.default_rng(0))
        normalized = rescale(a0) if rescale_enabled else np.clip(a0, -1.0, 1.0)
        res = env.step(to_physical(normalized, bounds))
        visibilities.append(res.info["visibility_noiseless"])
        obs = res.observation
        if res.done:
            unsafe = res.info["terminated_unsafe"]
            break
    vis = np.asarray(visibilities)
    last40 = vis[-40:] if len(vis) >= 40 else vis
    return {
        "steps": len(vis),
        "visibility_last40": float(last40.mean()),
        "visibility_final": float(vis[-1]),
        "terminated_unsafe": bool(unsafe),
    }


def evaluate_greedy(actor, env_factory: Callable[[], InterferometerEnv],
                    seeds, rescale_enabled: bool = True) -> dict:
    env = env_factory()
    episodes = [_greedy_episode(actor, env, int(s), rescale_enabled) for s in seeds]
    return {
        "episodes": len(episodes),
        "mean_visibility_last40": float(np.mean([e["visibility_last40"] for e in episodes])),
        "unsafe_rate": float(np.mean([e["terminated_unsafe"] for e in episodes])),
    }


def train(env_factory: Callable[[], InterferometerEnv], net_spec: NetworkSpec,
          cfg: TrainConfig, seed: int, out_dir) -> TrainResult:
    """Run the full collect/update loop and write checkpoints plus a JSONL log."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / "train_log.jsonl"
    ckpt_path = out_dir / "checkpoint_final.pt"

    torch.set_num_threads(1)
    ss = np.random.SeedSequence(seed)
    (env_ss, explore_ss, batch_ss, noise_ss, torch_ss, eval_ss) = ss.spawn(6)
    episode_rng = np.random.Generator(np.random.PCG64(env_ss))
    explore_rng = np.random.Generator(np.random.PCG64(explore_ss))
    batch_rng = np.random.Generator(np.random.PCG64(batch_ss))
    noise_rng = np.random.Generator(np.random.PCG64(noise_ss))
    eval_rng = np.random.Generator(np.random.PCG64(eval_ss))
    torch.manual_seed(int(np.random.Generator(np.random.PCG64(torch_ss)).integers(2**31)))

    actor = build_actor(net_spec, seed=seed)
    critic1 = build_critic(net_spec, seed=seed + 1)
    critic2 = build_critic(net_spec, seed=seed + 2)
    actor_targ = build_actor(net_spec, seed=seed)
    critic1_targ = build_critic(net_spec, seed=seed + 1)
    critic2_targ = build_critic(net_spec, seed=seed + 2)
    for targ, online in ((actor_targ, actor), (critic1_targ, critic1), (critic2_targ, critic2)):
        targ.load_state_dict(online.state_dict())
        for p in targ.parameters():
            p.requires_grad_(False)

    actor_opt = torch.optim.Adam(actor.parameters(), lr=cfg.actor_lr)
    critic1_opt = torch.optim.Adam(critic1.parameters(), lr=cfg.critic_lr)
    critic2_opt = torch.optim.Adam(critic2.parameters(), lr=cfg.critic_lr)

    env = env_factory()
    env_bounds = env.cfg.bounds
    obs_shape = (net_spec.vector_dim,) if net_spec.obs_mode == "vector" else (
        net_spec.frames, net_spec.pixels, net_spec.pixels)
    buffer = ReplayBuffer(cfg.buffer_capacity, obs_shape)

    def save(path, meta):
        save_checkpoint(path, net_spec,
                        {"actor": actor, "critic1": critic1, "critic2": critic2,
                         "actor_targ": actor_targ, "critic1_targ": critic1_targ,
                         "critic2_targ": critic2_targ},
                        meta=meta)

    started = time.monotonic()
    critic_updates = 0
    actor_updates = 0
    episodes = 0
    ep_return = 0.0
    ep_vis: list[float] = []
    last_losses = {"critic": float("nan"), "actor": float("nan")}
    final_eval: dict = {}
    best_eval: dict = {}
    best_path = out_dir / "checkpoint_best.pt"
    best_metric = -math.inf

    log_file = log_path.open("w")

    def log(record: dict):
        log_file.write(json.dumps(record) + "\n")

    log({"type": "config", "train": asdict(cfg), "network": asdict(net_spec), "seed": seed})

    obs, _ = env.reset(seed=int(episode_rng.integers(2**63)))
    try:
        for step in range(cfg.total_steps):
            if step < cfg.start_train_step:
                a0 = explore_rng.uniform(-1.0, 1.0, size=ACTION_DIM)
            else:
                a0 = select_action(actor, obs, exploration_sigma(cfg, step), explore_rng)
            normalized = rescale(a0) if cfg.rescale_enabled else np.clip(a0, -1.0, 1.0)
            res = env.step(to_physical(normalized, env_bounds))

            timeout_only = res.done and not res.info["terminated_unsafe"]
            d_store = 0.0 if (timeout_only and cfg.timeout_bootstrap) else float(res.done)
            buffer.add(obs, a0, res.reward, res.observation, d_store)

            ep_return += res.reward
            ep_vis.append(res.info["visibility_noiseless"])
            obs = res.observation

            if res.done:
                episodes += 1
                if episodes % max(1, cfg.log_every // 100) == 0:
                    vis = np.asarray(ep_vis)
                    log({"type": "episode", "step": step + 1, "episode": episodes,
                         "return": round(ep_return, 6),
                         "visibility_last40": float(vis[-40:].mean()),
                         "visibility_final": float(vis[-1]),
                         "length": len(ep_vis),
                         "sigma_explore": exploration_sigma(cfg, step),
                         "critic_loss": last_losses["critic"],
                         "actor_loss": last_losses["actor"]})
                ep_return, ep_vis = 0.0, []
                obs, _ = env.reset(seed=int(episode_rng.integers(2**63)))

            post = step + 1 - cfg.start_train_step
            if post > 0 and post % cfg.update_every == 0 and buffer.size >= cfg.batch_size:
                for j in range(cfg.num_epochs):
                    batch = buffer.sample(batch_rng, cfg.batch_size)
                    b_obs, b_act, _, _, _ = batch
                    y = compute_targets(batch, actor_targ, critic1_targ, critic2_targ,
                                        cfg, noise_rng)
                    for critic, opt in ((critic1, critic1_opt), (critic2, critic2_opt)):
                        opt.zero_grad(set_to_none=True)
                        q = critic(b_obs, b_act)
                        loss = torch.mean((q - y) ** 2)
                        if not torch.isfinite(loss):
                            save(out_dir / "checkpoint_diagnostic.pt",
                                 {"step": step + 1, "fault": "non-finite critic loss"})
                            raise TrainingFault(f"non-finite critic loss at step {step + 1}")
                        loss.backward()
                        clip_and_step(opt, critic, cfg.max_grad_norm)
                    critic_updates += 1
                    last_losses["critic"] = float(loss.detach())

                    if j % cfg.policy_delay == 0:
                        actor_opt.zero_grad(set_to_none=True)
                        actor_loss = -critic1(b_obs, actor(b_obs)).mean()
                        if not torch.isfinite(actor_loss):
                            save(out_dir / "checkpoint_diagnostic.pt",
                                 {"step": step + 1, "fault": "non-finite actor loss"})
                            raise TrainingFault(f"non-finite actor loss at step {step + 1}")
                        actor_loss.backward()
                        clip_and_step(actor_opt, actor, cfg.max_grad_norm)
                        actor_updates += 1
                        last_losses["actor"] = float(actor_loss.detach())
                        polyak_blend(actor_targ, actor, cfg.polyak)
                        polyak_blend(critic1_targ, critic1, cfg.polyak)
                        polyak_blend(critic2_targ, critic2, cfg.polyak)

            if cfg.eval_every and (step + 1) % cfg.eval_every == 0:
                seeds = eval_rng.integers(2**63, size=cfg.eval_episodes)
                final_eval = evaluate_greedy(actor, env_factory, seeds, cfg.rescale_enabled)
                log({"type": "eval", "step": step + 1, **final_eval,
                     "sigma_explore": exploration_sigma(cfg, step)})
                # selection prefers clean checkpoints: an unsafe episode in
                # the held-out eval outweighs a small visibility edge
                metric = final_eval["mean_visibility_last40"] - final_eval["unsafe_rate"]
                if cfg.keep_best and metric >= best_metric:
                    best_metric = metric
                    best_eval = {"step": step + 1, **final_eval}
                    save(best_path, {"step": step + 1, "eval": final_eval})

            if cfg.checkpoint_every and (step + 1) % cfg.checkpoint_every == 0:
                save(out_dir / f"checkpoint_step{step + 1}.pt", {"step": step + 1})

        save(ckpt_path, {"step": cfg.total_steps, "seed": seed,
                         "critic_updates": critic_updates, "actor_updates": actor_updates})
        if cfg.keep_best and not best_path.exists():
            save(best_path, {"step": cfg.total_steps})
    finally:
        log_file.close()

    return TrainResult(
        checkpoint_path=ckpt_path,
        best_checkpoint_path=best_path if cfg.keep_best else ckpt_path,
        log_path=log_path,
        env_steps=cfg.total_steps,
        critic_updates=critic_updates,
        actor_updates=actor_updates,
        episodes=episodes,
        final_eval=final_eval,
        best_eval=best_eval,
        wall_seconds=time.monotonic() - started,
    )
