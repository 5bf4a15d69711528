"""Pure-NumPy implementation of the frame-stack rendering kernel.

Mirrors the compiled kernel in ``_render_cy``; selected as a fallback when
the extension is unavailable (see ``render``).
"""

from __future__ import annotations

import numpy as np


def field_terms(
    xs: np.ndarray,
    x0u: float, y0u: float, kxu: float, kyu: float, ru: float, cqu: float, ampu: float,
    x0l: float, y0l: float, kxl: float, kyl: float, rl: float, cql: float, ampl: float,
):
    """Per-pixel interference terms on the square grid with coordinates xs.

    Returns (|E_u|^2, |E_l|^2, Re(E_u conj E_l), Im(E_u conj E_l)) as four
    (n, n) float64 arrays; row index is y.
    """
    ru2 = ru * ru
    rl2 = rl * rl
    fux = np.exp(-((xs - x0u) ** 2) / ru2 - 1j * (kxu * xs + cqu * xs * xs))
    fuy = np.exp(-((xs - y0u) ** 2) / ru2 - 1j * (kyu * xs + cqu * xs * xs))
    flx = np.exp(-((xs - x0l) ** 2) / rl2 - 1j * (kxl * xs + cql * xs * xs))
    fly = np.exp(-((xs - y0l) ** 2) / rl2 - 1j * (kyl * xs + cql * xs * xs))
    eu = ampu * np.outer(fuy, fux)
    el = ampl * np.outer(fly, flx)
    cross = eu * np.conj(el)
    return (np.abs(eu) ** 2, np.abs(el) ** 2,
            np.ascontiguousarray(cross.real), np.ascontiguousarray(cross.imag))


def synth_frames(
    base_u: np.ndarray,
    base_l: np.ndarray,
    cross_re: np.ndarray,
    cross_im: np.ndarray,
    phases: np.ndarray,
    brightness: float,
    noise_rel: float,
    noise: np.ndarray | None,
    full_scale: float,
) -> np.ndarray:
    """Assemble the frame stack for a phase sweep.

    frame_j = brightness * (|E_u|^2 + |E_l|^2 + 2 Re(E_u conj(E_l) e^{i phi_j})),
    optionally perturbed per pixel by noise_rel * frame * g (g standard
    normal), then divided by full_scale and clamped to [0, 1].
    """
    cos_p = np.cos(phases)[:, None, None]
    sin_p = np.sin(phases)[:, None, None]
    frames = base_u + base_l + 2.0 * (cos_p * cross_re - sin_p * cross_im)
    frames *= brightness
    if noise is not None and noise_rel > 0.0:
        frames *= 1.0 + noise_rel * noise
    frames /= full_scale
    np.clip(frames, 0.0, 1.0, out=frames)
    return frames
