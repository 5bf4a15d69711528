"""Continuous action pipeline: raw policy output -> exponential rescale ->
physical deltas.

A raw action component a0 in [-1, 1] maps to

    a = sign(a0) * 1000^(|a0| - 1)   if |a0| > 0.17
    a = 0                            otherwise

so nonzero normalised magnitudes span [1000^-0.83, 1] ~ [3.24e-3, 1], and the
physical delta is a times the per-axis maximum deflection.
"""

from __future__ import annotations

import numpy as np

# Maximum deflection per control: mirror2 x/y (rad), BS2 x/y (rad), lens2 (mm).
CONTROL_BOUNDS = np.array([2.6e-3, 1.8e-3, 1.3e-3, 0.9e-3, 7.5])
CONTROL_NAMES = ("mirror2_x", "mirror2_y", "bs2_x", "bs2_y", "lens2")

DEAD_ZONE = 0.17
RESCALE_BASE = 1000.0
MIN_NORMALIZED_ACTION = RESCALE_BASE ** (DEAD_ZONE - 1.0)  # ~3.236e-3

ACTION_DIM = 5


def rescale(raw: np.ndarray) -> np.ndarray:
    """Exponentially rescale raw actions; out-of-range inputs are clipped first."""
    a0 = np.clip(np.asarray(raw, dtype=float), -1.0, 1.0)
    mag = np.abs(a0)
    out = np.where(mag > DEAD_ZONE, np.sign(a0) * RESCALE_BASE ** (mag - 1.0), 0.0)
    return out


def to_physical(normalized: np.ndarray, bounds: np.ndarray = CONTROL_BOUNDS) -> np.ndarray:
    """Scale a normalised 5-vector (|a_i| <= 1) to physical deltas."""
    a = np.asarray(normalized, dtype=float)
    if a.shape != (ACTION_DIM,):
        raise ValueError(f"expected a 5-vector, got shape {a.shape}")
    if np.any(np.abs(a) > 1.0 + 1e-12):
        raise ValueError("normalised action components must lie in [-1, 1]")
    return a * np.asarray(bounds, dtype=float)


def raw_to_physical(raw: np.ndarray, bounds: np.ndarray = CONTROL_BOUNDS) -> np.ndarray:
    """Full pipeline: clip, rescale, scale to physical units."""
    return to_physical(rescale(raw), bounds)
