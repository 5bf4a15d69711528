import numpy as np
import pytest

from mzi_align.beam_optics import GaussianBeam


def quadrature_overlap(upper: GaussianBeam, lower: GaussianBeam,
                       n: int = 4001) -> complex:
    """Independent 2-D overlap integral by midpoint quadrature on separable axes."""
    extent = 0.0
    for b in (upper, lower):
        extent = max(extent, abs(b.center[0]) + 6 * b.radius,
                     abs(b.center[1]) + 6 * b.radius)
    xs = np.linspace(-extent, extent, n)
    h = xs[1] - xs[0]

    def axis_factor(beam, axis):
        c0 = beam.center[axis]
        kt = beam.tilt[axis]
        cq = beam.wavenumber * beam.curvature_inv / 2.0
        return np.exp(-((xs - c0) ** 2) / beam.radius**2 - 1j * (kt * xs + cq * xs**2))

    amp = upper.amplitude_scale * lower.amplitude_scale
    ox = np.sum(axis_factor(upper, 0) * np.conj(axis_factor(lower, 0))) * h
    oy = np.sum(axis_factor(upper, 1) * np.conj(axis_factor(lower, 1))) * h
    return complex(amp * ox * oy)


def quadrature_norm_sq(beam: GaussianBeam, n: int = 4001) -> float:
    return abs(quadrature_overlap(beam, beam, n))


def quadrature_visibility(upper: GaussianBeam, lower: GaussianBeam) -> float:
    ov = abs(quadrature_overlap(upper, lower))
    return 2 * ov / (quadrature_norm_sq(upper) + quadrature_norm_sq(lower))


def fresnel_field_1d(e0: np.ndarray, xs: np.ndarray, k: float, z: float,
                     x_eval: np.ndarray) -> np.ndarray:
    """Brute-force 1-D Fresnel diffraction integral (up to a global factor).

    Uses the exp(-i k z) propagation convention, matching fields whose
    diverging wavefronts carry phase exp(-i k x^2 / (2 rho)) with rho > 0.
    """
    h = xs[1] - xs[0]
    out = np.empty(len(x_eval), dtype=complex)
    for i, xe in enumerate(x_eval):
        out[i] = np.sum(e0 * np.exp(-1j * k * (xe - xs) ** 2 / (2 * z))) * h
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
