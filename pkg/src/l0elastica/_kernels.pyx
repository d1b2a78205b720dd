# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-pixel and per-frequency kernels.

Mirrors ``_kernels_py`` one-for-one.  Inputs are C-contiguous float64 fields
of shape (2, M, N) and complex128 block arrays of shape (k, k, M, N).
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()

cdef double DEGENERATE_NORM = 1e-12


def threshold_l0(const double[:, :, ::1] p, double thresh_sq):
    cdef Py_ssize_t m = p.shape[1], n = p.shape[2], i, j
    out = np.zeros((2, m, n))
    cdef double[:, :, ::1] o = out
    cdef double a, b
    with nogil:
        for i in range(m):
            for j in range(n):
                a = p[0, i, j]
                b = p[1, i, j]
                if a * a + b * b > thresh_sq:
                    o[0, i, j] = a
                    o[1, i, j] = b
    return out


def curvature_shrink(const double[:, :, ::1] p, const double[:, ::1] div_lam, double weight):
    cdef Py_ssize_t m = p.shape[1], n = p.shape[2], i, j
    out = np.zeros((2, m, n))
    cdef double[:, :, ::1] o = out
    cdef double a, b, mag, d, factor
    with nogil:
        for i in range(m):
            for j in range(n):
                a = p[0, i, j]
                b = p[1, i, j]
                mag = sqrt(a * a + b * b)
                if mag > 0.0:
                    d = div_lam[i, j]
                    factor = 1.0 - weight * d * d / mag
                    if factor > 0.0:
                        o[0, i, j] = factor * a
                        o[1, i, j] = factor * b
    return out


def project_s(const double[:, :, ::1] p, const double[:, :, ::1] lam,
              double gamma1, double eps, int max_iter):
    cdef Py_ssize_t m = p.shape[1], n = p.shape[2], i, j
    cdef int it
    p_out = np.empty((2, m, n))
    lam_out = np.empty((2, m, n))
    cdef double[:, :, ::1] po = p_out
    cdef double[:, :, ::1] lo = lam_out
    cdef double y1, y2, w1, w2, lnorm, scale, l1h, l2h, g_hat
    cdef double theta, new, z1, z2, nz, l1t, l2t, p1t, p2t, g_t
    cdef bint degenerate
    with nogil:
        for i in range(m):
            for j in range(n):
                y1 = p[0, i, j]
                y2 = p[1, i, j]
                w1 = lam[0, i, j]
                w2 = lam[1, i, j]

                lnorm = sqrt(w1 * w1 + w2 * w2)
                scale = 1.0 / (lnorm if lnorm > 1.0 else 1.0)
                l1h = w1 * scale
                l2h = w2 * scale
                g_hat = (y1 * y1 + y2 * y2) + gamma1 * ((l1h - w1) * (l1h - w1) + (l2h - w2) * (l2h - w2))

                degenerate = False
                theta = sqrt(y1 * y1 + y2 * y2)
                for it in range(max_iter):
                    z1 = theta * y1 + gamma1 * w1
                    z2 = theta * y2 + gamma1 * w2
                    nz = sqrt(z1 * z1 + z2 * z2)
                    if nz < DEGENERATE_NORM:
                        degenerate = True
                        break
                    new = (y1 * z1 + y2 * z2) / nz
                    if new < 0.0:
                        new = 0.0
                    if fabs(new - theta) < eps:
                        theta = new
                        break
                    theta = new

                if not degenerate:
                    z1 = theta * y1 + gamma1 * w1
                    z2 = theta * y2 + gamma1 * w2
                    nz = sqrt(z1 * z1 + z2 * z2)
                    degenerate = nz < DEGENERATE_NORM

                if not degenerate:
                    l1t = z1 / nz
                    l2t = z2 / nz
                    p1t = theta * l1t
                    p2t = theta * l2t
                    g_t = ((p1t - y1) * (p1t - y1) + (p2t - y2) * (p2t - y2)
                           + gamma1 * ((l1t - w1) * (l1t - w1) + (l2t - w2) * (l2t - w2)))
                    if g_hat > g_t:
                        po[0, i, j] = p1t
                        po[1, i, j] = p2t
                        lo[0, i, j] = l1t
                        lo[1, i, j] = l2t
                        continue

                po[0, i, j] = 0.0
                po[1, i, j] = 0.0
                lo[0, i, j] = l1h
                lo[1, i, j] = l2h
    return p_out, lam_out


def apply_blocks(const double complex[:, :, :, ::1] inv, const double complex[:, :, ::1] rhs):
    cdef Py_ssize_t k = inv.shape[0], m = inv.shape[2], n = inv.shape[3]
    cdef Py_ssize_t a, b, i, j
    out = np.zeros((k, m, n), dtype=np.complex128)
    cdef double complex[:, :, ::1] o = out
    cdef double complex acc
    with nogil:
        for a in range(k):
            for i in range(m):
                for j in range(n):
                    acc = 0
                    for b in range(k):
                        acc = acc + inv[a, b, i, j] * rhs[b, i, j]
                    o[a, i, j] = acc
    return out
