"""Actor and twin-critic networks with orthogonal initialisation, a
gradient-clipped Adam step and polyak target blending.

Two observation encoders are supported: the VGG-derived image encoder
(8 conv layers over the 16-channel 64x64 frame stack, pooling after each
pair) and a plain 3-layer MLP for the vector observation variant.  Critics
receive the raw action concatenated to the flattened encoder features.
Backed by torch; all contracts are exercised against finite-difference
oracles in the test suite.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import torch
from torch import nn

ACTION_DIM = 5


class TrainingFault(RuntimeError):
    """Non-finite gradients or loss surfaced during optimisation."""


@dataclass(frozen=True)
class NetworkSpec:
    obs_mode: str = "frames"  # "frames" | "vector"
    frames: int = 16
    pixels: int = 64
    conv_channels: tuple = (32, 32, 64, 64, 128, 128, 256, 256)
    fc_sizes: tuple = (512, 128)
    vector_dim: int = 6
    hidden_sizes: tuple = (64, 64)  # vector-mode MLP widths
    action_dim: int = ACTION_DIM

    def __post_init__(self):
        if self.obs_mode == "frames":
            if len(self.conv_channels) % 2 != 0:
                raise ValueError("conv channels must come in pooled pairs")
            if self.pixels % (2 ** (len(self.conv_channels) // 2)) != 0:
                raise ValueError("input size must survive the pooling stages")
        elif self.obs_mode != "vector":
            raise ValueError(f"unknown obs_mode {self.obs_mode!r}")

    def spec_hash(self) -> str:
        return hashlib.sha256(json.dumps(asdict(self), sort_keys=True).encode()).hexdigest()

    @classmethod
    def downsized(cls) -> "NetworkSpec":
        """Tiny image spec for finite-difference gradient checks."""
        return cls(frames=2, pixels=8, conv_channels=(4, 4), fc_sizes=(16, 8))


class ConvEncoder(nn.Module):
    """VGG-style stack: 3x3 convs, stride 1, 2x2 max-pool after each pair."""

    def __init__(self, spec: NetworkSpec):
        super().__init__()
        layers = []
        in_ch = spec.frames
        for i, out_ch in enumerate(spec.conv_channels):
            layers.append(nn.Conv2d(in_ch, out_ch, kernel_size=3, padding=1))
            layers.append(nn.ReLU())
            if i % 2 == 1:
                layers.append(nn.MaxPool2d(2))
            in_ch = out_ch
        self.net = nn.Sequential(*layers)
        side = spec.pixels // (2 ** (len(spec.conv_channels) // 2))
        self.out_features = spec.conv_channels[-1] * side * side

    def forward(self, x):
        return self.net(x).flatten(1)


class VectorEncoder(nn.Module):
    """Identity feature map for the vector observation."""

    def __init__(self, spec: NetworkSpec):
        super().__init__()
        self.out_features = spec.vector_dim

    def forward(self, x):
        return x


def _head(in_features: int, widths: tuple, out_dim: int) -> nn.Sequential:
    layers = []
    for w in widths:
        layers += [nn.Linear(in_features, w), nn.ReLU()]
        in_features = w
    layers.append(nn.Linear(in_features, out_dim))
    return nn.Sequential(*layers)


class Actor(nn.Module):
    """Deterministic policy: observation -> raw action in (-1, 1)^5."""

    def __init__(self, spec: NetworkSpec):
        super().__init__()
        self.spec = spec
        if spec.obs_mode == "frames":
            self.encoder = ConvEncoder(spec)
            widths = spec.fc_sizes
        else:
            self.encoder = VectorEncoder(spec)
            widths = spec.hidden_sizes
        self.head = _head(self.encoder.out_features, widths, spec.action_dim)

    def forward(self, obs):
        return torch.tanh(self.head(self.encoder(obs)))


class Critic(nn.Module):
    """Action-value function Q(obs, raw action) -> scalar."""

    def __init__(self, spec: NetworkSpec):
        super().__init__()
        self.spec = spec
        if spec.obs_mode == "frames":
            self.encoder = ConvEncoder(spec)
            widths = spec.fc_sizes
        else:
            self.encoder = VectorEncoder(spec)
            widths = spec.hidden_sizes
        self.head = _head(self.encoder.out_features + spec.action_dim, widths, 1)

    def forward(self, obs, action):
        feats = torch.cat([self.encoder(obs), action], dim=1)
        return self.head(feats).squeeze(-1)


def init_orthogonal(module: nn.Module, seed: int) -> nn.Module:
    """Orthogonally initialise every conv/linear weight; zero the biases.

    Convolution kernels are treated as 2-D (out_channels x fan-in), so the
    smaller of rows/columns forms an orthonormal set.  Deterministic per
    seed.
    """
    gen = torch.Generator().manual_seed(seed)
    for m in module.modules():
        if isinstance(m, (nn.Linear, nn.Conv2d)):
            nn.init.orthogonal_(m.weight, generator=gen)
            nn.init.zeros_(m.bias)
    return module


def build_actor(spec: NetworkSpec, seed: int) -> Actor:
    return init_orthogonal(Actor(spec), seed)


def build_critic(spec: NetworkSpec, seed: int) -> Critic:
    return init_orthogonal(Critic(spec), seed)


def forward_actor(actor: Actor, obs: torch.Tensor) -> torch.Tensor:
    if obs.dim() == len(_obs_shape(actor.spec)):
        obs = obs.unsqueeze(0)
    return actor(obs)


def forward_critic(critic: Critic, obs: torch.Tensor, action: torch.Tensor) -> torch.Tensor:
    if obs.dim() == len(_obs_shape(critic.spec)):
        obs = obs.unsqueeze(0)
        action = action.unsqueeze(0)
    return critic(obs, action)


def _obs_shape(spec: NetworkSpec) -> tuple:
    if spec.obs_mode == "frames":
        return (spec.frames, spec.pixels, spec.pixels)
    return (spec.vector_dim,)


def clip_and_step(optimizer: torch.optim.Optimizer, module: nn.Module,
                  max_grad_norm: float = 10.0) -> float:
    """Clip the global gradient norm, then apply one optimiser step.

    Returns the pre-clip norm.  Raises TrainingFault on non-finite gradients.
    """
    total = torch.nn.utils.clip_grad_norm_(module.parameters(), max_grad_norm)
    if not torch.isfinite(total):
        raise TrainingFault(f"non-finite gradient norm {total}")
    optimizer.step()
    return float(total)


@torch.no_grad()
def polyak_blend(target: nn.Module, online: nn.Module, rho: float) -> None:
    """target <- rho * target + (1 - rho) * online, elementwise."""
    if not (0.0 <= rho <= 1.0):
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    t_params = list(target.parameters())
    o_params = list(online.parameters())
    if len(t_params) != len(o_params):
        raise ValueError("parameter lists differ in length")
    for t, o in zip(t_params, o_params):
        if t.shape != o.shape:
            raise ValueError(f"shape mismatch {t.shape} vs {o.shape}")
        t.mul_(rho).add_(o, alpha=1.0 - rho)


def count_parameters(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())


def save_checkpoint(path, spec: NetworkSpec, nets: dict[str, nn.Module],
                    meta: dict | None = None) -> None:
    """Self-describing checkpoint: named tensors plus the network spec hash."""
    payload = {
        "kind": "mzi-align-checkpoint",
        "network_spec": asdict(spec),
        "spec_hash": spec.spec_hash(),
        "meta": meta or {},
        "state": {name: net.state_dict() for name, net in nets.items()},
        "shapes": {
            name: {k: tuple(v.shape) for k, v in net.state_dict().items()}
            for name, net in nets.items()
        },
    }
    torch.save(payload, path)


def load_checkpoint(path) -> tuple[NetworkSpec, dict, dict]:
    """Returns (spec, state dicts by net name, meta). Validates the hash."""
    payload = torch.load(path, map_location="cpu", weights_only=True)
    if payload.get("kind") != "mzi-align-checkpoint":
        raise ValueError(f"{path} is not an alignment checkpoint")
    raw_spec = payload["network_spec"]
    for key in ("conv_channels", "fc_sizes", "hidden_sizes"):
        raw_spec[key] = tuple(raw_spec[key])
    spec = NetworkSpec(**raw_spec)
    if spec.spec_hash() != payload["spec_hash"]:
        raise ValueError("checkpoint spec hash mismatch")
    return spec, payload["state"], payload.get("meta", {})


def load_actor(path) -> Actor:
    spec, state, _ = load_checkpoint(path)
    actor = Actor(spec)
    actor.load_state_dict(state["actor"])
    actor.eval()
    return actor
