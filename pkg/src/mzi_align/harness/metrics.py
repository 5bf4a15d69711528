"""Evaluation metrics: frame-based visibility, per-step curves, final
visibility, time-to-threshold tables, action norms and the parallel-action
fraction."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field

import numpy as np

from ..action_space import rescale
from ..beam_optics import GaussianBeam, visibility_from_sweep
from .trajlog import TrajectoryRecord

PARALLEL_TOLERANCE = 0.1


def _axis_pixel_sums(beam_u: GaussianBeam, beam_l: GaussianBeam, axis: int,
                     xs: np.ndarray) -> tuple[float, float, complex]:
    """1-D pixel sums of |E_u|^2, |E_l|^2 and E_u conj(E_l) along one axis."""
    def factor(beam):
        c0 = beam.center[axis]
        kt = beam.tilt[axis]
        cq = beam.wavenumber * beam.curvature_inv / 2.0
        return np.exp(-((xs - c0) ** 2) / beam.radius**2 - 1j * (kt * xs + cq * xs**2))

    fu = factor(beam_u)
    fl = factor(beam_l)
    h = xs[1] - xs[0]
    return (
        float(np.sum(np.abs(fu) ** 2) * h),
        float(np.sum(np.abs(fl) ** 2) * h),
        complex(np.sum(fu * np.conj(fl)) * h),
    )


def frame_visibility(upper: GaussianBeam, lower: GaussianBeam,
                     n_phases: int = 256) -> float:
    """Visibility of the noiseless rendered sweep.

    The rendered total intensity separates into per-axis pixel sums, so the
    sweep is evaluated on an adaptive 1-D grid fine enough for the fringe
    and curvature phases and wide enough for the envelopes; this equals
    rendering full frames at that resolution and summing pixels.
    """
    extent = 0.0
    for b in (upper, lower):
        extent = max(extent,
                     abs(b.center[0]) + 4.5 * b.radius,
                     abs(b.center[1]) + 4.5 * b.radius)
    max_freq = 0.0
    dc = abs(upper.wavenumber * upper.curvature_inv - lower.wavenumber * lower.curvature_inv) / 2.0
    for axis in (0, 1):
        max_freq = max(max_freq, abs(upper.tilt[axis] - lower.tilt[axis]) + 2.0 * dc * extent)
    h_phase = 0.4 / max_freq if max_freq > 0 else math.inf
    h = min(min(upper.radius, lower.radius) / 8.0, h_phase)
    n = min(int(math.ceil(2 * extent / h)) + 1, 65536)
    xs = np.linspace(-extent, extent, n)

    ux, lx, cx = _axis_pixel_sums(upper, lower, 0, xs)
    uy, ly, cy = _axis_pixel_sums(upper, lower, 1, xs)
    amp = upper.amplitude_scale * lower.amplitude_scale
    const = upper.amplitude_scale**2 * ux * uy + lower.amplitude_scale**2 * lx * ly
    cross = amp * cx * cy

    phases = np.linspace(0.0, 2 * math.pi, n_phases, endpoint=False)
    totals = const + 2.0 * (np.cos(phases) * cross.real - np.sin(phases) * cross.imag)
    totals = np.clip(totals, 0.0, None)
    return visibility_from_sweep(zip(phases, totals))


def parallel_action_fraction(records: list[TrajectoryRecord], horizon: int = 100) -> np.ndarray:
    """Percentage of actions at each step index that translate the beam
    while conserving its direction (equal-and-opposite mirror/BS tilts).

    An axis counts as parallel when both tilt deltas are nonzero and their
    sum cancels to within 10% of the larger magnitude; a step counts when
    either axis qualifies.
    """
    counts = np.zeros(horizon)
    parallels = np.zeros(horizon)
    for rec in records:
        if rec.step >= horizon:
            continue
        counts[rec.step] += 1
        if is_parallel_action(rec.physical_action):
            parallels[rec.step] += 1
    with np.errstate(invalid="ignore"):
        return np.where(counts > 0, 100.0 * parallels / counts, np.nan)


def is_parallel_action(physical_action) -> bool:
    a = np.asarray(physical_action, dtype=float)
    for mirror, bs in ((a[0], a[2]), (a[1], a[3])):
        if mirror != 0.0 and bs != 0.0:
            if abs(mirror + bs) <= PARALLEL_TOLERANCE * max(abs(mirror), abs(bs)):
                return True
    return False


def time_to_threshold(vis_by_episode: dict[int, np.ndarray],
                      thresholds=(0.92, 0.95, 0.98)) -> dict:
    """First-crossing statistics per threshold, in environment steps.

    Returns {threshold: {"mean_steps": float | None,
                         "not_reached_pct": float}} where the mean covers
    only episodes that cross.
    """
    out = {}
    for t in thresholds:
        crossings = []
        missed = 0
        for vis in vis_by_episode.values():
            idx = np.nonzero(np.asarray(vis) >= t)[0]
            if len(idx):
                crossings.append(int(idx[0]) + 1)  # steps are 1-based
            else:
                missed += 1
        n = len(vis_by_episode)
        out[t] = {
            "mean_steps": float(np.mean(crossings)) if crossings else None,
            "not_reached_pct": 100.0 * missed / n if n else 0.0,
        }
    return out


@dataclass
class EvalSummary:
    episodes: int
    horizon: int
    mean_visibility_curve: list
    visibility_q25: list
    visibility_q50: list
    visibility_q75: list
    final_visibility_mean: float  # mean over last 40 steps, averaged over episodes
    final_visibility_std: float
    time_to_threshold: dict
    action_norm_curve: list          # physical units
    normalized_action_norm_curve: list
    parallel_action_pct_curve: list
    unsafe_episode_count: int
    unsafe_rate: float
    wall_seconds: float

    def to_dict(self) -> dict:
        return asdict(self)


def summarize(records: list[TrajectoryRecord], horizon: int = 100,
              thresholds=(0.92, 0.95, 0.98), wall_seconds: float = 0.0) -> EvalSummary:
    """Aggregate evaluation trajectories into the paper-style statistics.

    Episodes cut short by unsafe termination contribute to the per-step
    curves only up to their end and are reported separately.
    """
    by_episode: dict[int, list[TrajectoryRecord]] = defaultdict(list)
    for rec in records:
        by_episode[rec.episode].append(rec)
    for recs in by_episode.values():
        recs.sort(key=lambda r: r.step)
        steps = [r.step for r in recs]
        if steps != list(range(steps[0], steps[0] + len(steps))):
            raise ValueError("step indices must be contiguous within an episode")

    unsafe_episodes = {ep for ep, recs in by_episode.items()
                       if any(r.terminated_unsafe for r in recs)}
    vis_columns: list[list[float]] = [[] for _ in range(horizon)]
    norm_columns: list[list[float]] = [[] for _ in range(horizon)]
    raw_norm_columns: list[list[float]] = [[] for _ in range(horizon)]
    finals = []
    vis_by_episode = {}
    for ep, recs in by_episode.items():
        vis = np.array([r.visibility for r in recs])
        vis_by_episode[ep] = vis
        if ep not in unsafe_episodes:
            finals.append(vis[-40:].mean() if len(vis) >= 40 else vis.mean())
        for r in recs:
            if r.step < horizon and not r.terminated_unsafe:
                vis_columns[r.step].append(r.visibility)
                norm_columns[r.step].append(float(np.linalg.norm(r.physical_action)))
                raw_norm_columns[r.step].append(
                    float(np.linalg.norm(rescale(np.asarray(r.raw_action)))))

    def col_stat(cols, fn):
        return [float(fn(c)) if c else float("nan") for c in cols]

    return EvalSummary(
        episodes=len(by_episode),
        horizon=horizon,
        mean_visibility_curve=col_stat(vis_columns, np.mean),
        visibility_q25=col_stat(vis_columns, lambda c: np.percentile(c, 25)),
        visibility_q50=col_stat(vis_columns, lambda c: np.percentile(c, 50)),
        visibility_q75=col_stat(vis_columns, lambda c: np.percentile(c, 75)),
        final_visibility_mean=float(np.mean(finals)) if finals else float("nan"),
        final_visibility_std=float(np.std(finals)) if finals else float("nan"),
        time_to_threshold=time_to_threshold(vis_by_episode, thresholds),
        action_norm_curve=col_stat(norm_columns, np.mean),
        normalized_action_norm_curve=col_stat(raw_norm_columns, np.mean),
        parallel_action_pct_curve=parallel_action_fraction(records, horizon).tolist(),
        unsafe_episode_count=len(unsafe_episodes),
        unsafe_rate=len(unsafe_episodes) / len(by_episode) if by_episode else 0.0,
        wall_seconds=wall_seconds,
    )
