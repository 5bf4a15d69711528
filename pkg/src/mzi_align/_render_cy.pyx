# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled rendering kernel: per-pixel interference terms and frame-stack
synthesis. Semantics match ``_render_np`` exactly (same formulas, float64)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, sin

cnp.import_array()


def field_terms(
    double[::1] xs,
    double x0u, double y0u, double kxu, double kyu, double ru, double cqu, double ampu,
    double x0l, double y0l, double kxl, double kyl, double rl, double cql, double ampl,
):
    """Per-pixel |E_u|^2, |E_l|^2, Re/Im of E_u*conj(E_l) on the xs x xs grid."""
    cdef Py_ssize_t n = xs.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] base_u = np.empty((n, n))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] base_l = np.empty((n, n))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] cross_re = np.empty((n, n))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] cross_im = np.empty((n, n))
    cdef double[:, ::1] bu = base_u, bl = base_l, cr = cross_re, ci = cross_im

    # 1-D separable factors: amplitude and phase per axis for each beam.
    cdef cnp.ndarray[cnp.float64_t, ndim=2] tmp = np.empty((8, n))
    cdef double[:, ::1] f = tmp
    cdef Py_ssize_t i, j
    cdef double x, ru2 = ru * ru, rl2 = rl * rl
    for i in range(n):
        x = xs[i]
        f[0, i] = ampu * exp(-((x - x0u) * (x - x0u)) / ru2)   # upper amp, x
        f[1, i] = kxu * x + cqu * x * x                        # upper phase, x
        f[2, i] = exp(-((x - y0u) * (x - y0u)) / ru2)          # upper amp, y
        f[3, i] = kyu * x + cqu * x * x                        # upper phase, y
        f[4, i] = ampl * exp(-((x - x0l) * (x - x0l)) / rl2)   # lower amp, x
        f[5, i] = kxl * x + cql * x * x                        # lower phase, x
        f[6, i] = exp(-((x - y0l) * (x - y0l)) / rl2)          # lower amp, y
        f[7, i] = kyl * x + cql * x * x                        # lower phase, y

    cdef double au, al, ph, pu_y, pl_y
    for j in range(n):      # y (row)
        pu_y = f[3, j]
        pl_y = f[7, j]
        for i in range(n):  # x (column)
            au = f[0, i] * f[2, j]
            al = f[4, i] * f[6, j]
            bu[j, i] = au * au
            bl[j, i] = al * al
            ph = (f[1, i] + pu_y) - (f[5, i] + pl_y)
            # E_u conj(E_l) = au*al * exp(-i(phase_u - phase_l))
            cr[j, i] = au * al * cos(ph)
            ci[j, i] = -au * al * sin(ph)
    return base_u, base_l, cross_re, cross_im


def synth_frames(
    double[:, ::1] base_u,
    double[:, ::1] base_l,
    double[:, ::1] cross_re,
    double[:, ::1] cross_im,
    double[::1] phases,
    double brightness,
    double noise_rel,
    noise,
    double full_scale,
):
    """Frame stack for a phase sweep; see ``_render_np.synth_frames``."""
    cdef Py_ssize_t m = phases.shape[0]
    cdef Py_ssize_t n = base_u.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=3] out = np.empty((m, n, n))
    cdef double[:, :, ::1] o = out
    cdef double[:, :, ::1] g
    cdef bint with_noise = noise is not None and noise_rel > 0.0
    if with_noise:
        g = noise
    cdef Py_ssize_t t, j, i
    cdef double c, s, v, inv_fs = 1.0 / full_scale
    for t in range(m):
        c = cos(phases[t])
        s = sin(phases[t])
        for j in range(n):
            for i in range(n):
                v = brightness * (base_u[j, i] + base_l[j, i]
                                  + 2.0 * (c * cross_re[j, i] - s * cross_im[j, i]))
                if with_noise:
                    v *= 1.0 + noise_rel * g[t, j, i]
                v *= inv_fs
                if v < 0.0:
                    v = 0.0
                elif v > 1.0:
                    v = 1.0
                o[t, j, i] = v
    return out
