"""Single YAML configuration covering geometry, environment, randomization,
training and harness settings, with dotted-path overrides."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from pathlib import Path

import yaml

from ..env import EpisodeConfig, SetupGeometry
from ..nn_core import NetworkSpec
from ..randomization import RandomizationConfig
from ..td3 import TrainConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class HarnessConfig:
    eval_episodes: int = 50
    thresholds: tuple = (0.92, 0.95, 0.98)
    sweep_phases: int = 256
    out_dir: str = "runs"
    port: int = 8710


@dataclass(frozen=True)
class AppConfig:
    geometry: SetupGeometry = field(default_factory=SetupGeometry)
    randomization: RandomizationConfig = field(default_factory=RandomizationConfig)
    env: EpisodeConfig = field(default_factory=EpisodeConfig)
    network: NetworkSpec = field(default_factory=NetworkSpec)
    train: TrainConfig = field(default_factory=TrainConfig)
    harness: HarnessConfig = field(default_factory=HarnessConfig)

    def __post_init__(self):
        # env carries its own geometry/randomization; keep them in sync
        if self.env.geometry != self.geometry or self.env.randomization != self.randomization:
            object.__setattr__(
                self, "env",
                replace(self.env, geometry=self.geometry, randomization=self.randomization),
            )
        if self.network.obs_mode != self.env.obs_mode:
            object.__setattr__(self, "network", replace(self.network, obs_mode=self.env.obs_mode))

    def digest(self) -> str:
        """Hash of everything that shapes behaviour; the per-run seed is
        recorded separately in log headers and excluded here."""
        data = asdict(self)
        data["env"].pop("seed", None)
        return hashlib.sha256(
            json.dumps(data, sort_keys=True, default=str).encode()
        ).hexdigest()[:16]

    def to_yaml(self, path) -> None:
        Path(path).write_text(yaml.safe_dump(_plain(asdict(self)), sort_keys=False))


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalar
        return obj.item()
    return obj


def default_config() -> AppConfig:
    return AppConfig()


def desk_scale_config() -> AppConfig:
    """CPU-sized preset: vector observations, small MLPs, 1e5 steps.

    Learning rates are raised from the full-scale image settings to suit the
    short run and tiny networks; periodic evaluation every 5k steps drives
    best-checkpoint selection.
    """
    return AppConfig(
        env=EpisodeConfig(obs_mode="vector"),
        network=NetworkSpec(obs_mode="vector", hidden_sizes=(64, 64)),
        train=TrainConfig(
            total_steps=100_000,
            actor_lr=1e-4,
            critic_lr=1e-3,
            eval_every=5_000,
            eval_episodes=10,
            checkpoint_every=0,
        ),
    )


PRESETS = {"default": default_config, "desk-scale": desk_scale_config}

_SECTIONS = {
    "geometry": SetupGeometry,
    "randomization": RandomizationConfig,
    "env": EpisodeConfig,
    "network": NetworkSpec,
    "train": TrainConfig,
    "harness": HarnessConfig,
}

# tuple-typed fields that YAML/JSON round-trip as lists
_TUPLE_FIELDS = {"duty_range", "thresholds", "conv_channels", "fc_sizes", "hidden_sizes", "control_bounds"}
# nested dataclass fields inside EpisodeConfig
_NESTED = {"geometry": SetupGeometry, "randomization": RandomizationConfig}


def _coerce(cls, data: dict):
    if not isinstance(data, dict):
        raise ConfigError(f"section for {cls.__name__} must be a mapping, got {type(data)}")
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown keys for {cls.__name__}: {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in _TUPLE_FIELDS and isinstance(value, list):
            value = tuple(value)
        if key in _NESTED and isinstance(value, dict):
            value = _coerce(_NESTED[key], value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {cls.__name__}: {exc}") from exc


def load_config(path=None, preset: str = "default", overrides: list[str] | None = None) -> AppConfig:
    """Build an AppConfig from a preset, an optional YAML file and overrides.

    YAML sections mirror the dataclass names; overrides are dotted
    assignments like ``train.gamma=0.9``.
    """
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    cfg = PRESETS[preset]()
    if path is not None:
        try:
            raw = yaml.safe_load(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"unparseable config {path}: {exc}") from exc
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigError("top level of the config must be a mapping")
        unknown = set(raw) - set(_SECTIONS) - {"preset"}
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        if "preset" in raw:
            name = raw.pop("preset")
            if name not in PRESETS:
                raise ConfigError(f"unknown preset {name!r}")
            cfg = PRESETS[name]()
        sections = {}
        for name, cls in _SECTIONS.items():
            current = getattr(cfg, name)
            if name in raw:
                merged = {**asdict(current), **raw[name]}
                sections[name] = _coerce(cls, merged)
            else:
                sections[name] = current
        cfg = AppConfig(**sections)
    for item in overrides or []:
        cfg = apply_override(cfg, item)
    return cfg


def apply_override(cfg: AppConfig, assignment: str) -> AppConfig:
    """Apply one ``section.key=value`` override; values parse as YAML."""
    if "=" not in assignment:
        raise ConfigError(f"override must look like section.key=value, got {assignment!r}")
    dotted, _, raw_value = assignment.partition("=")
    parts = dotted.strip().split(".")
    if len(parts) != 2 or parts[0] not in _SECTIONS:
        raise ConfigError(f"override path must be <section>.<key> with section in "
                          f"{sorted(_SECTIONS)}, got {dotted!r}")
    section, key = parts
    value = yaml.safe_load(raw_value)
    current = getattr(cfg, section)
    data = asdict(current)
    if key not in data:
        raise ConfigError(f"unknown key {key!r} in section {section!r}")
    data[key] = value
    updated = _coerce(_SECTIONS[section], data)
    return AppConfig(**{**{f.name: getattr(cfg, f.name) for f in fields(AppConfig)},
                        section: updated})
