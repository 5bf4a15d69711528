"""Gaussian-beam math for the two-arm interference simulator.

All lengths are millimetres, angles radians, transverse wavevectors mm^-1.
A beam at a transverse plane is described by its complex parameter

    1/q = 1/rho - i * lambda / (pi * r^2)

together with a centre offset, a transverse tilt and an amplitude scale.
Propagation through paraxial elements follows the ABCD formalism,
q' = (A q + B) / (C q + D).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Tuple

import numpy as np

__all__ = [
    "BeamDomainError",
    "FocalSingularityError",
    "UndefinedVisibilityError",
    "ComplexQ",
    "GaussianBeam",
    "ABCD",
    "Frame",
    "q_from",
    "propagate",
    "abcd_free",
    "abcd_lens",
    "abcd_compose",
    "abcd_inverse",
    "pixel_centers",
    "field_on_grid",
    "render_frame",
    "frame_total",
    "render_sweep_totals",
    "visibility_from_sweep",
    "visibility_analytic",
    "field_overlap",
    "field_norm_sq",
]

PARAXIAL_TILT_LIMIT = 0.05  # max |k_t| / k for a valid paraxial beam


class BeamDomainError(ValueError):
    """Input outside the physical domain (non-positive radius, f = 0, ...)."""


class FocalSingularityError(ArithmeticError):
    """ABCD denominator C*q + D vanished at the evaluation plane."""


class UndefinedVisibilityError(ValueError):
    """Visibility requested for an all-dark intensity sweep."""


@dataclass(frozen=True)
class ComplexQ:
    """Complex beam parameter 1/q at a transverse plane.

    Parameters
    ----------
    inverse_q
        1/q in mm^-1; the real part is the wavefront curvature 1/rho and the
        imaginary part is -lambda / (pi r^2), strictly negative.
    wavelength
        Vacuum wavelength in mm.
    """

    inverse_q: complex
    wavelength: float

    def __post_init__(self):
        if not (self.wavelength > 0):
            raise BeamDomainError(f"wavelength must be positive, got {self.wavelength}")
        if not (self.inverse_q.imag < 0):
            raise BeamDomainError(
                f"imag(1/q) must be strictly negative for a physical beam, got {self.inverse_q}"
            )

    @property
    def radius(self) -> float:
        """1/e^2 field radius r in mm, recovered from imag(1/q)."""
        return math.sqrt(-self.wavelength / (math.pi * self.inverse_q.imag))

    @property
    def curvature_inv(self) -> float:
        """Inverse wavefront curvature radius 1/rho in mm^-1 (0 means flat)."""
        return self.inverse_q.real

    @property
    def curvature(self) -> float:
        """Wavefront curvature radius rho in mm; +inf for a flat wavefront."""
        c = self.inverse_q.real
        return math.inf if c == 0.0 else 1.0 / c

    @property
    def q(self) -> complex:
        return 1.0 / self.inverse_q


def q_from(radius: float, curvature: float, wavelength: float) -> ComplexQ:
    """Build a ComplexQ from radius r and curvature radius rho.

    Parameters
    ----------
    radius
        1/e^2 field radius in mm, > 0.
    curvature
        Wavefront curvature radius rho in mm; ``math.inf`` for flat, != 0.
    wavelength
        Wavelength in mm.
    """
    if not (radius > 0):
        raise BeamDomainError(f"beam radius must be positive, got {radius}")
    if curvature == 0:
        raise BeamDomainError("curvature radius must be nonzero (use inf for flat)")
    inv_rho = 0.0 if math.isinf(curvature) else 1.0 / curvature
    inv_q = complex(inv_rho, -wavelength / (math.pi * radius * radius))
    return ComplexQ(inv_q, wavelength)


@dataclass(frozen=True)
class ABCD:
    """Paraxial ray-transfer matrix [[a, b], [c, d]] with unit determinant."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if abs(det - 1.0) > 1e-9:
            raise ValueError(f"ABCD determinant must be 1, got {det}")

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=float)


def abcd_free(d: float) -> ABCD:
    """Free propagation over distance d (mm)."""
    return ABCD(1.0, float(d), 0.0, 1.0)


def abcd_lens(f: float) -> ABCD:
    """Thin lens of focal length f (mm), f != 0."""
    if f == 0:
        raise BeamDomainError("focal length must be nonzero")
    return ABCD(1.0, 0.0, -1.0 / f, 1.0)


def abcd_compose(m2: ABCD, m1: ABCD) -> ABCD:
    """Matrix product m2 @ m1: m1 is traversed first."""
    return ABCD(
        m2.a * m1.a + m2.b * m1.c,
        m2.a * m1.b + m2.b * m1.d,
        m2.c * m1.a + m2.d * m1.c,
        m2.c * m1.b + m2.d * m1.d,
    )


def abcd_inverse(m: ABCD) -> ABCD:
    """Inverse transfer matrix (det = 1, so [[d, -b], [-c, a]])."""
    return ABCD(m.d, -m.b, -m.c, m.a)


def propagate(q: ComplexQ, m: ABCD) -> ComplexQ:
    """Transform a beam parameter through an element: q' = (Aq + B) / (Cq + D)."""
    qv = q.q
    den = m.c * qv + m.d
    num = m.a * qv + m.b
    if den == 0 or num == 0:
        raise FocalSingularityError("beam focused exactly at the evaluation plane")
    return ComplexQ(den / num, q.wavelength)


@dataclass(frozen=True)
class GaussianBeam:
    """A Gaussian beam at the camera plane.

    The complex field is

        E(x, y) = s * exp(-((x-x0)^2 + (y-y0)^2) / r^2)
                    * exp(-i (kx x + ky y + k (x^2+y^2) / (2 rho)))

    with r and rho taken from ``q`` and k = 2 pi / lambda.  The quadratic
    phase is referenced to the optical axis, the envelope to the beam centre.
    """

    q: ComplexQ
    center: Tuple[float, float] = (0.0, 0.0)
    tilt: Tuple[float, float] = (0.0, 0.0)  # transverse wavevector, mm^-1
    amplitude_scale: float = 1.0

    def __post_init__(self):
        k = self.wavenumber
        kt = math.hypot(self.tilt[0], self.tilt[1])
        if kt > PARAXIAL_TILT_LIMIT * k:
            raise BeamDomainError(
                f"tilt {kt:.4g} mm^-1 exceeds the paraxial limit {PARAXIAL_TILT_LIMIT * k:.4g}"
            )
        if not (0.0 < self.amplitude_scale <= 2.0):
            raise BeamDomainError(
                f"amplitude_scale must lie in (0, 2], got {self.amplitude_scale}"
            )

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.q.wavelength

    @property
    def radius(self) -> float:
        return self.q.radius

    @property
    def curvature_inv(self) -> float:
        return self.q.curvature_inv


@dataclass(frozen=True)
class Frame:
    """One rendered intensity image at a fixed relative phase."""

    pixels: np.ndarray
    field_of_view: float
    phase: float

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=float)
        if px.ndim != 2 or px.shape[0] != px.shape[1] or px.shape[0] < 2:
            raise ValueError(f"pixels must be a square grid of side >= 2, got {px.shape}")
        if np.any(px < 0):
            raise ValueError("pixel intensities must be non-negative")
        if not (self.field_of_view > 0):
            raise ValueError("field of view must be positive")
        object.__setattr__(self, "pixels", px)

    @property
    def n(self) -> int:
        return self.pixels.shape[0]


def pixel_centers(fov: float, n: int) -> np.ndarray:
    """Coordinates of pixel centres for a square sensor of side `fov`."""
    if n < 2:
        raise ValueError("need at least a 2x2 grid")
    step = fov / n
    return (np.arange(n) + 0.5) * step - fov / 2.0


def field_on_grid(beam: GaussianBeam, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Complex field of a beam sampled at the outer product of xs and ys.

    Returns an array of shape (len(ys), len(xs)) — row index is y.
    """
    x0, y0 = beam.center
    kx, ky = beam.tilt
    r2 = beam.radius**2
    cq = beam.wavenumber * beam.curvature_inv / 2.0
    fx = np.exp(-((xs - x0) ** 2) / r2 - 1j * (kx * xs + cq * xs**2))
    fy = np.exp(-((ys - y0) ** 2) / r2 - 1j * (ky * ys + cq * ys**2))
    return beam.amplitude_scale * np.outer(fy, fx)


def _interference_terms(
    upper: GaussianBeam, lower: GaussianBeam, fov: float, n: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(|E_u|^2, |E_l|^2, E_u * conj(E_l)) on the sensor grid."""
    xs = pixel_centers(fov, n)
    eu = field_on_grid(upper, xs, xs)
    el = field_on_grid(lower, xs, xs)
    return np.abs(eu) ** 2, np.abs(el) ** 2, eu * np.conj(el)


def render_frame(
    upper: GaussianBeam, lower: GaussianBeam, phi: float, fov: float, n: int = 64
) -> Frame:
    """Render the interference pattern |E_u e^{i phi} + E_l|^2.

    Intensities are point-sampled at pixel centres on an n x n grid covering
    a square of side `fov` centred on the optical axis.
    """
    base_u, base_l, cross = _interference_terms(upper, lower, fov, n)
    pixels = base_u + base_l + 2.0 * (np.cos(phi) * cross.real - np.sin(phi) * cross.imag)
    np.clip(pixels, 0.0, None, out=pixels)  # guard tiny negative round-off
    return Frame(pixels, fov, phi)


def frame_total(frame: Frame) -> float:
    """Total intensity of a frame: pixel sum times pixel area."""
    px_area = (frame.field_of_view / frame.n) ** 2
    return float(frame.pixels.sum() * px_area)


def render_sweep_totals(
    upper: GaussianBeam,
    lower: GaussianBeam,
    phases: np.ndarray,
    fov: float,
    n: int = 64,
) -> np.ndarray:
    """Total rendered intensity I_tot(phi) for each phase of a sweep.

    Algebraically identical to rendering each frame and summing its pixels:
    the pixel sum of the cross term is accumulated once and recombined per
    phase.
    """
    base_u, base_l, cross = _interference_terms(upper, lower, fov, n)
    px_area = (fov / n) ** 2
    const = (base_u.sum() + base_l.sum()) * px_area
    cr = cross.real.sum() * px_area
    ci = cross.imag.sum() * px_area
    phases = np.asarray(phases, dtype=float)
    totals = const + 2.0 * (np.cos(phases) * cr - np.sin(phases) * ci)
    # perfect destructive interference can round off below zero
    return np.clip(totals, 0.0, None)


def visibility_from_sweep(samples: Iterable[Tuple[float, float]] | Sequence) -> float:
    """Visibility (max - min) / (max + min) of a total-intensity sweep.

    Parameters
    ----------
    samples
        Iterable of (phase, total intensity) pairs; at least two samples,
        all intensities non-negative and not all zero.
    """
    arr = np.asarray([(float(p), float(i)) for p, i in samples], dtype=float)
    if arr.shape[0] < 2:
        raise ValueError("need at least two sweep samples")
    totals = arr[:, 1]
    if np.any(totals < 0):
        raise ValueError("intensities must be non-negative")
    hi = totals.max()
    lo = totals.min()
    if hi == 0.0:
        raise UndefinedVisibilityError("visibility undefined for an all-zero sweep")
    return float((hi - lo) / (hi + lo))


def _overlap_1d(
    xu: float, ru: float, ku: float, cu: float,
    xl: float, rl: float, kl: float, cl: float,
) -> complex:
    """Closed-form integral of f_u(x) * conj(f_l(x)) for 1-D Gaussian factors.

    f(x) = exp(-(x - x0)^2 / r^2) * exp(-i (k_t x + c x^2)),  c = k / (2 rho).
    The product is a single complex Gaussian, integrated via
    int exp(-a x^2 + b x + c0) dx = sqrt(pi / a) exp(b^2 / (4a) + c0).
    """
    a = 1.0 / ru**2 + 1.0 / rl**2 + 1j * (cu - cl)
    b = 2.0 * xu / ru**2 + 2.0 * xl / rl**2 - 1j * (ku - kl)
    c0 = -(xu**2) / ru**2 - (xl**2) / rl**2
    return np.sqrt(np.pi / a) * np.exp(b * b / (4.0 * a) + c0)


def field_overlap(upper: GaussianBeam, lower: GaussianBeam) -> complex:
    """2-D overlap integral <E_u, E_l> = iint E_u conj(E_l) dx dy, closed form."""
    ru, rl = upper.radius, lower.radius
    cu = upper.wavenumber * upper.curvature_inv / 2.0
    cl = lower.wavenumber * lower.curvature_inv / 2.0
    ox = _overlap_1d(upper.center[0], ru, upper.tilt[0], cu,
                     lower.center[0], rl, lower.tilt[0], cl)
    oy = _overlap_1d(upper.center[1], ru, upper.tilt[1], cu,
                     lower.center[1], rl, lower.tilt[1], cl)
    return complex(upper.amplitude_scale * lower.amplitude_scale * ox * oy)


def field_norm_sq(beam: GaussianBeam) -> float:
    """Total single-beam intensity iint |E|^2 dx dy = s^2 * pi r^2 / 2."""
    return beam.amplitude_scale**2 * math.pi * beam.radius**2 / 2.0


def visibility_analytic(upper: GaussianBeam, lower: GaussianBeam) -> float:
    """Closed-form visibility 2 |<E_u, E_l>| / (||E_u||^2 + ||E_l||^2)."""
    ov = abs(field_overlap(upper, lower))
    v = 2.0 * ov / (field_norm_sq(upper) + field_norm_sq(lower))
    return float(min(max(v, 0.0), 1.0))
