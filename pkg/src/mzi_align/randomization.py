"""Domain randomization: per-episode dynamics draws and per-step observation
draws, each independently toggleable for ablation runs."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

NOMINAL_RADIUS = 0.71  # mm, measured beam radius
NOMINAL_DUTY = 0.5


@dataclass(frozen=True)
class RandomizationConfig:
    radius_rel: float = 0.20
    radius_enabled: bool = True
    pixel_noise_rel: float = 0.20
    pixel_noise_enabled: bool = True
    brightness_rel: float = 0.30
    brightness_enabled: bool = True
    phase_noise_sigma: float = 0.5  # rad
    phase_noise_enabled: bool = True
    cyclic_shift_enabled: bool = True
    duty_range: tuple[float, float] = (0.7, 0.95)
    duty_enabled: bool = True

    def __post_init__(self):
        for name in ("radius_rel", "pixel_noise_rel", "brightness_rel"):
            v = getattr(self, name)
            if not (0.0 <= v < 1.0):
                raise ValueError(f"{name} must lie in [0, 1), got {v}")
        if self.phase_noise_sigma < 0:
            raise ValueError("phase_noise_sigma must be >= 0")
        lo, hi = self.duty_range
        if not (0.0 < lo <= hi < 1.0):
            raise ValueError(f"duty_range must be an interval within (0, 1), got {self.duty_range}")

    @classmethod
    def all_off(cls) -> "RandomizationConfig":
        return cls(
            radius_enabled=False,
            pixel_noise_enabled=False,
            brightness_enabled=False,
            phase_noise_enabled=False,
            cyclic_shift_enabled=False,
            duty_enabled=False,
        )

    def without(self, name: str) -> "RandomizationConfig":
        """Ablation helper: the same config with one randomization disabled."""
        key = f"{name}_enabled"
        if not hasattr(self, key):
            raise ValueError(f"unknown randomization {name!r}")
        return replace(self, **{key: False})


# names accepted by the CLI --randomization flag
ABLATION_NAMES = ("radius", "pixel_noise", "brightness", "phase_noise", "cyclic_shift", "duty")


def config_from_name(name: str) -> RandomizationConfig:
    if name == "on":
        return RandomizationConfig()
    if name == "off":
        return RandomizationConfig.all_off()
    if name.startswith("no-"):
        return RandomizationConfig().without(name[3:].replace("-", "_"))
    raise ValueError(f"unknown randomization preset {name!r}")


@dataclass(frozen=True)
class StepDraws:
    """Per-step observation randomization, constant across the 16 frames
    except the per-frame phase offsets."""

    brightness: float
    cyclic_shift: int
    duty: float
    phase_offsets: np.ndarray
    pixel_noise_seed: int
    pixel_noise_rel: float


def draw_episode(rng: np.random.Generator, cfg: RandomizationConfig,
                 nominal_radius: float = NOMINAL_RADIUS) -> float:
    """Episode beam radius, uniform within +-radius_rel of nominal."""
    if not cfg.radius_enabled:
        return nominal_radius
    lo = nominal_radius * (1.0 - cfg.radius_rel)
    hi = nominal_radius * (1.0 + cfg.radius_rel)
    return float(rng.uniform(lo, hi))


def draw_step(rng: np.random.Generator, cfg: RandomizationConfig,
              n_frames: int = 16) -> StepDraws:
    """Observation draws for one environment step.

    Draw order is fixed (brightness, shift, duty, phase offsets, pixel seed);
    disabled items are not drawn, keeping ablations reproducible.
    """
    brightness = 1.0
    if cfg.brightness_enabled:
        brightness = float(rng.uniform(1.0 - cfg.brightness_rel, 1.0 + cfg.brightness_rel))
    shift = int(rng.integers(0, n_frames)) if cfg.cyclic_shift_enabled else 0
    duty = float(rng.uniform(*cfg.duty_range)) if cfg.duty_enabled else NOMINAL_DUTY
    if cfg.phase_noise_enabled:
        offsets = rng.normal(0.0, cfg.phase_noise_sigma, size=n_frames)
    else:
        offsets = np.zeros(n_frames)
    pixel_seed = int(rng.integers(0, 2**63 - 1)) if cfg.pixel_noise_enabled else 0
    rel = cfg.pixel_noise_rel if cfg.pixel_noise_enabled else 0.0
    return StepDraws(brightness, shift, duty, offsets, pixel_seed, rel)
