"""Episodic alignment environment.

State: tilt of mirror 2 and BS 2 (x/y each) plus the lens-2 offset from its
confocal spacing.  Observations: 16 interference frames over one piezo
period (or a normalised 6-vector of lower-beam geometry).  Reward:
V - ln(1 - V) on the noiseless visibility, with a -0.04 penalty and
termination when an action would leave the allowed control box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .action_space import ACTION_DIM, CONTROL_BOUNDS
from .beam_optics import (
    ABCD,
    GaussianBeam,
    abcd_compose,
    abcd_free,
    abcd_inverse,
    abcd_lens,
    propagate,
    q_from,
    visibility_analytic,
)
from .randomization import NOMINAL_RADIUS, RandomizationConfig, StepDraws, draw_episode, draw_step
from .render import render_stack

__all__ = [
    "SetupGeometry",
    "ControlState",
    "EpisodeConfig",
    "StepResult",
    "InterferometerEnv",
    "BoundsError",
    "EpisodeLifecycleError",
    "derive_beams",
    "lens_chain",
    "sawtooth_phase",
    "render_observation",
    "reward_from_visibility",
    "UNSAFE_PENALTY",
    "VISIBILITY_CLIP",
    "VECTOR_OBS_DIM",
]

UNSAFE_PENALTY = -0.04
VISIBILITY_CLIP = 1.0 - 1e-9
VECTOR_OBS_DIM = 6
# knee of the symmetric-log compression applied to vector observations:
# linear below ~2% of full range, logarithmic above, so near-aligned states
# remain resolvable to the policy
VECTOR_OBS_KNEE = 0.02


def symlog_norm(z: np.ndarray, knee: float = VECTOR_OBS_KNEE) -> np.ndarray:
    """Monotone odd map of [-1, 1] onto [-1, 1] expanding values near 0."""
    return np.sign(z) * np.log1p(np.abs(z) / knee) / math.log1p(1.0 / knee)


def symlog_denorm(y: np.ndarray, knee: float = VECTOR_OBS_KNEE) -> np.ndarray:
    """Inverse of symlog_norm."""
    return np.sign(y) * knee * np.expm1(np.abs(y) * math.log1p(1.0 / knee))


class BoundsError(ValueError):
    """Control state outside the allowed box."""


class EpisodeLifecycleError(RuntimeError):
    """step() called on a finished episode."""


@dataclass(frozen=True)
class SetupGeometry:
    """Bench distances (mm), wavelength (mm) and the measured beam radius."""

    d_bs1_mirror2: float = 300.0
    d_mirror2_bs2: float = 200.0
    d_bs2_camera: float = 100.0
    d_bs1_lens1: float = 50.0
    focal_length: float = 50.0
    wavelength: float = 632e-6
    nominal_radius: float = NOMINAL_RADIUS

    def __post_init__(self):
        for name in ("d_bs1_mirror2", "d_mirror2_bs2", "d_bs2_camera", "d_bs1_lens1",
                     "focal_length", "wavelength", "nominal_radius"):
            if not (getattr(self, name) > 0):
                raise ValueError(f"{name} must be positive")

    @property
    def d_lens2_camera(self) -> float:
        """Nominal lens2-to-camera distance along the lower arm."""
        return (self.d_bs1_mirror2 - self.d_bs1_lens1 - 2.0 * self.focal_length
                + self.d_mirror2_bs2 + self.d_bs2_camera)

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength


@dataclass(frozen=True)
class ControlState:
    """The five motorised degrees of freedom, ordered
    (mirror2 x, mirror2 y, BS2 x, BS2 y, lens2 offset)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (ACTION_DIM,):
            raise ValueError(f"expected 5 controls, got shape {v.shape}")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def zero(cls) -> "ControlState":
        return cls(np.zeros(ACTION_DIM))

    @property
    def mirror2_tilt(self) -> tuple[float, float]:
        return (self.values[0], self.values[1])

    @property
    def bs2_tilt(self) -> tuple[float, float]:
        return (self.values[2], self.values[3])

    @property
    def lens2_offset(self) -> float:
        return float(self.values[4])

    def in_bounds(self, bounds: np.ndarray = CONTROL_BOUNDS) -> bool:
        return bool(np.all(np.abs(self.values) <= np.asarray(bounds)))


@dataclass(frozen=True)
class EpisodeConfig:
    horizon: int = 100
    seed: int = 0
    randomization: RandomizationConfig = field(default_factory=RandomizationConfig)
    fov: float = 6.0  # mm, square sensor side
    geometry: SetupGeometry = field(default_factory=SetupGeometry)
    obs_mode: str = "frames"  # "frames" | "vector"
    pixels: int = 64
    frames_per_obs: int = 16
    actuator_noise: bool = True
    actuator_noise_rel: float = 0.04
    full_scale: float = 4.0  # 4x peak single-beam intensity
    control_bounds: tuple = (2.6e-3, 1.8e-3, 1.3e-3, 0.9e-3, 7.5)

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.obs_mode not in ("frames", "vector"):
            raise ValueError(f"unknown obs_mode {self.obs_mode!r}")
        b = np.asarray(self.control_bounds, dtype=float)
        if b.shape != (ACTION_DIM,) or np.any(b <= 0):
            raise ValueError("control_bounds must be 5 positive limits")

    @property
    def bounds(self) -> np.ndarray:
        return np.asarray(self.control_bounds, dtype=float)


@dataclass(frozen=True)
class StepResult:
    observation: np.ndarray
    reward: float
    done: bool
    info: dict


def lens_chain(geom: SetupGeometry, delta: float) -> ABCD:
    """ABCD chain of the lower arm's telescope from BS1 to the camera,
    with lens 2 displaced by `delta` from the confocal spacing."""
    f = geom.focal_length
    m = abcd_free(geom.d_bs1_lens1)
    for elem in (abcd_lens(f), abcd_free(2.0 * f + delta), abcd_lens(f),
                 abcd_free(geom.d_lens2_camera - delta)):
        m = abcd_compose(elem, m)
    return m


@lru_cache(maxsize=8)
def _nominal_chain_inverse(geom: SetupGeometry) -> ABCD:
    return abcd_inverse(lens_chain(geom, 0.0))


def derive_beams(ctrl: ControlState, geom: SetupGeometry, episode_radius: float,
                 bounds: np.ndarray = CONTROL_BOUNDS) -> tuple[GaussianBeam, GaussianBeam]:
    """Beams at the camera plane for a control state.

    The upper beam is the flat nominal reference: centred, untilted, radius
    `episode_radius`.  The lower beam picks up per-axis angle 2(theta + beta)
    (each reflective tilt doubles the beam angle) and centre offset
    2 theta (d_m2_bs2 + d_bs2_cam) + 2 beta d_bs2_cam; its q is the nominal
    input propagated through the lens chain.  The chain input is the
    pre-image of the flat nominal beam under the confocal (delta = 0) chain,
    so the aligned telescope reproduces the reference beam exactly and only
    the lens offset perturbs it.
    """
    if not ctrl.in_bounds(bounds):
        raise BoundsError(f"control state outside the allowed box: {ctrl.values}")
    q_nominal = q_from(episode_radius, math.inf, geom.wavelength)
    upper = GaussianBeam(q_nominal)

    theta = ctrl.mirror2_tilt
    beta = ctrl.bs2_tilt
    lever_mirror = geom.d_mirror2_bs2 + geom.d_bs2_camera
    lever_bs = geom.d_bs2_camera
    center = tuple(2.0 * t * lever_mirror + 2.0 * b * lever_bs for t, b in zip(theta, beta))
    k = geom.wavenumber
    tilt = tuple(k * 2.0 * (t + b) for t, b in zip(theta, beta))

    q_in = propagate(q_nominal, _nominal_chain_inverse(geom))
    q_low = propagate(q_in, lens_chain(geom, ctrl.lens2_offset))
    lower = GaussianBeam(q_low, center=center, tilt=tilt)
    return upper, lower


def reward_from_visibility(v: float) -> float:
    """Alignment reward V - ln(1 - V), clipped just below V = 1."""
    v = min(v, VISIBILITY_CLIP)
    return v - math.log1p(-v)


def sawtooth_phase(t: np.ndarray, duty: float) -> np.ndarray:
    """Piezo phase for times t in [0, 1): rises 0 -> 2 pi over `duty`,
    falls back over the remainder."""
    t = np.asarray(t, dtype=float)
    rising = t < duty
    phase = np.where(rising, t / duty, (1.0 - t) / (1.0 - duty))
    return 2.0 * math.pi * phase


def render_observation(upper: GaussianBeam, lower: GaussianBeam, draws: StepDraws,
                       cfg: EpisodeConfig) -> np.ndarray:
    """16 frames over one piezo period with the step's randomization draws.

    Frame phases follow the sawtooth at the drawn duty cycle plus per-frame
    Gaussian offsets; the cyclic trigger shift rotates the sequence; the
    brightness factor scales intensities; pixel noise is applied relative to
    each noiseless intensity; frames are normalised by the full-scale
    constant and clamped to [0, 1].
    """
    n_frames = cfg.frames_per_obs
    t = np.arange(n_frames) / n_frames
    phases = sawtooth_phase(t, draws.duty) + draws.phase_offsets
    phases = np.roll(phases, draws.cyclic_shift)
    noise = None
    if draws.pixel_noise_rel > 0.0:
        noise_rng = np.random.Generator(np.random.PCG64(draws.pixel_noise_seed))
        noise = noise_rng.standard_normal((n_frames, cfg.pixels, cfg.pixels))
    frames = render_stack(
        upper, lower, phases, cfg.fov, cfg.pixels,
        brightness=draws.brightness,
        noise_rel=draws.pixel_noise_rel,
        noise=noise,
        full_scale=cfg.full_scale,
    )
    return frames.astype(np.float32)


def _vector_scales(cfg: EpisodeConfig) -> np.ndarray:
    """Normalisation constants for the 6-vector observation, from the
    reachable extremes of centre, angle, radius ratio and curvature."""
    geom = cfg.geometry
    b = cfg.bounds
    x0_max = 2.0 * b[0] * (geom.d_mirror2_bs2 + geom.d_bs2_camera) + 2.0 * b[2] * geom.d_bs2_camera
    y0_max = 2.0 * b[1] * (geom.d_mirror2_bs2 + geom.d_bs2_camera) + 2.0 * b[3] * geom.d_bs2_camera
    ax_max = 2.0 * (b[0] + b[2])
    ay_max = 2.0 * (b[1] + b[3])
    log_ratio_max = 0.0
    inv_rho_max = 0.0
    q_nom = q_from(geom.nominal_radius, math.inf, geom.wavelength)
    q_in = propagate(q_nom, _nominal_chain_inverse(geom))
    for delta in np.linspace(-b[4], b[4], 41):
        q_low = propagate(q_in, lens_chain(geom, float(delta)))
        log_ratio_max = max(log_ratio_max, abs(math.log(q_low.radius / geom.nominal_radius)))
        inv_rho_max = max(inv_rho_max, abs(q_low.curvature_inv))
    return np.array([x0_max, y0_max, ax_max, ay_max,
                     1.05 * log_ratio_max, 1.05 * inv_rho_max])


class InterferometerEnv:
    """Single-episode-at-a-time alignment environment.

    Mutable per-episode state; one instance per thread.  All randomness is
    driven by the reset seed, so equal seeds give bit-identical episodes.
    """

    def __init__(self, cfg: EpisodeConfig):
        self.cfg = cfg
        self._vec_scales = _vector_scales(cfg) if cfg.obs_mode == "vector" else None
        self._rng: Optional[np.random.Generator] = None
        self._seed_seq: Optional[np.random.SeedSequence] = None
        self._ctrl = ControlState.zero()
        self._episode_radius = cfg.geometry.nominal_radius
        self._steps = 0
        self._done = True
        self._last_draws: Optional[StepDraws] = None

    # -- episode lifecycle -------------------------------------------------

    @property
    def control_state(self) -> ControlState:
        return self._ctrl

    @property
    def episode_radius(self) -> float:
        return self._episode_radius

    @property
    def step_count(self) -> int:
        return self._steps

    @property
    def done(self) -> bool:
        return self._done

    def beams(self) -> tuple[GaussianBeam, GaussianBeam]:
        return derive_beams(self._ctrl, self.cfg.geometry, self._episode_radius,
                            self.cfg.bounds)

    def visibility(self) -> float:
        """Noiseless ground-truth visibility of the current state."""
        return visibility_analytic(*self.beams())

    def reset(self, seed: int | None = None) -> tuple[np.ndarray, dict]:
        """Start a new episode: misalign uniformly within the control box.

        With `seed` given, the episode is fully determined by it; without,
        episodes continue a stream spawned from the config seed.
        """
        if seed is not None:
            self._seed_seq = np.random.SeedSequence(seed)
        elif self._seed_seq is None:
            self._seed_seq = np.random.SeedSequence(self.cfg.seed)
        self._rng = np.random.Generator(np.random.PCG64(self._seed_seq))
        self._seed_seq = self._seed_seq.spawn(1)[0]

        self._episode_radius = draw_episode(self._rng, self.cfg.randomization,
                                            self.cfg.geometry.nominal_radius)
        bounds = self.cfg.bounds
        self._ctrl = ControlState(self._rng.uniform(-bounds, bounds))
        self._steps = 0
        self._done = False
        obs = self._observe()
        return obs, self._info(terminated_unsafe=False)

    def step(self, action: np.ndarray) -> StepResult:
        """Apply a physical 5-vector delta to the controls.

        An action whose nominal target leaves the allowed box terminates the
        episode with the penalty reward and leaves the state unchanged.
        Otherwise actuator noise jitters the accepted deltas (clamped to the
        box) and the post-move observation and reward are returned.
        """
        if self._done:
            raise EpisodeLifecycleError("episode is finished; call reset()")
        a = np.asarray(action, dtype=float)
        if a.shape != (ACTION_DIM,):
            raise ValueError(f"expected a 5-vector action, got shape {a.shape}")
        bounds = self.cfg.bounds
        if np.any(np.abs(a) > bounds * (1.0 + 1e-9)):
            raise ValueError("physical deltas exceed the per-step deflection limits")

        proposed = self._ctrl.values + a
        if np.any(np.abs(proposed) > bounds):
            self._done = True
            obs = self._observe()
            return StepResult(obs, UNSAFE_PENALTY, True, self._info(terminated_unsafe=True))

        executed = a
        if self.cfg.actuator_noise and np.any(a != 0.0):
            jitter = 1.0 + self._rng.normal(0.0, self.cfg.actuator_noise_rel, size=ACTION_DIM)
            executed = a * jitter
        new_values = np.clip(self._ctrl.values + executed, -bounds, bounds)
        self._ctrl = ControlState(new_values)

        self._steps += 1
        self._done = self._steps >= self.cfg.horizon
        obs = self._observe()
        info = self._info(terminated_unsafe=False)
        return StepResult(obs, reward_from_visibility(info["visibility_noiseless"]),
                          self._done, info)

    # -- observations ------------------------------------------------------

    @property
    def last_draws(self) -> Optional[StepDraws]:
        """Observation randomization draws behind the latest frames (frames mode)."""
        return self._last_draws

    def _observe(self) -> np.ndarray:
        upper, lower = self.beams()
        if self.cfg.obs_mode == "vector":
            return self._vector_obs(lower)
        draws = draw_step(self._rng, self.cfg.randomization, self.cfg.frames_per_obs)
        self._last_draws = draws
        return render_observation(upper, lower, draws, self.cfg)

    def _vector_obs(self, lower: GaussianBeam) -> np.ndarray:
        s = self._vec_scales
        raw = np.array([
            lower.center[0], lower.center[1],
            lower.tilt[0] / self.cfg.geometry.wavenumber,
            lower.tilt[1] / self.cfg.geometry.wavenumber,
            math.log(lower.radius / self._episode_radius),
            lower.curvature_inv,
        ])
        return symlog_norm(np.clip(raw / s, -1.0, 1.0))

    def _info(self, terminated_unsafe: bool) -> dict:
        return {
            "visibility_noiseless": self.visibility(),
            "control_state": self._ctrl,
            "terminated_unsafe": terminated_unsafe,
            "episode_radius": self._episode_radius,
            "step": self._steps,
        }
