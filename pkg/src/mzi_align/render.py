"""Rendering backend selection.

The frame-synthesis inner loop dominates simulator runtime during
image-observation training, so it ships as a compiled Cython kernel with a
NumPy fallback chosen at import time.  Set ``MZI_ALIGN_PURE_NUMPY=1`` to
force the fallback; ``benchmarks/bench_render.py`` compares the two.
"""

from __future__ import annotations

import os

import numpy as np

from . import _render_np
from .beam_optics import GaussianBeam, pixel_centers

if os.environ.get("MZI_ALIGN_PURE_NUMPY"):
    _impl = _render_np
    BACKEND = "numpy"
else:
    try:
        from . import _render_cy as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - build dependent
        _impl = _render_np
        BACKEND = "numpy"


def beam_params(beam: GaussianBeam) -> tuple:
    """Flatten a beam into the scalar tuple the kernels consume."""
    cq = beam.wavenumber * beam.curvature_inv / 2.0
    return (
        beam.center[0], beam.center[1],
        beam.tilt[0], beam.tilt[1],
        beam.radius, cq, beam.amplitude_scale,
    )


def render_stack(
    upper: GaussianBeam,
    lower: GaussianBeam,
    phases: np.ndarray,
    fov: float,
    n: int,
    brightness: float = 1.0,
    noise_rel: float = 0.0,
    noise: np.ndarray | None = None,
    full_scale: float = 1.0,
    impl=None,
) -> np.ndarray:
    """Render a stack of interference frames over a phase sweep.

    Returns (len(phases), n, n) float64 intensities, scaled by `brightness`,
    perturbed per pixel by `noise_rel * value * noise` when noise is given,
    normalised by `full_scale` and clamped to [0, 1].
    """
    kernel = impl if impl is not None else _impl
    xs = np.ascontiguousarray(pixel_centers(fov, n))
    terms = kernel.field_terms(xs, *beam_params(upper), *beam_params(lower))
    phases = np.ascontiguousarray(np.asarray(phases, dtype=float))
    if noise is not None:
        noise = np.ascontiguousarray(noise, dtype=float)
    return np.asarray(
        kernel.synth_frames(*terms, phases, float(brightness), float(noise_rel),
                            noise, float(full_scale))
    )
