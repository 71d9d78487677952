# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-pixel kernels: OD conversion and stain (un)mixing.

Same contracts as ``restain._kernels_np``; the linear kernels accumulate in
the same order so results are bit-identical across backends.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, rint

cdef double LN10 = 2.302585092994045684

cnp.import_array()

NAME = "compiled"


def od_from_rgb(const unsigned char[:, :, ::1] pixels, const double[:, ::1] lut):
    cdef Py_ssize_t h = pixels.shape[0], w = pixels.shape[1]
    out_arr = np.empty((h, w, 3), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, j, c
    with nogil:
        for i in range(h):
            for j in range(w):
                for c in range(3):
                    out[i, j, c] = lut[c, pixels[i, j, c]]
    return out_arr


def rgb_from_od(const double[:, :, ::1] od, const double[::1] white_point, double delta):
    cdef Py_ssize_t h = od.shape[0], w = od.shape[1]
    out_arr = np.empty((h, w, 3), dtype=np.uint8)
    cdef unsigned char[:, :, ::1] out = out_arr
    cdef unsigned char[3] background
    cdef Py_ssize_t i, j, c
    cdef double t, odv
    for c in range(3):
        t = rint(white_point[c])
        background[c] = <unsigned char> (0.0 if t < 0.0 else (255.0 if t > 255.0 else t))
    with nogil:
        for i in range(h):
            for j in range(w):
                for c in range(3):
                    odv = od[i, j, c]
                    if odv == 0.0:
                        # zero density is the background white point; tiles are
                        # mostly background, so skip the exp
                        out[i, j, c] = background[c]
                        continue
                    t = rint(exp(odv * -LN10) * (white_point[c] + delta) - delta)
                    if t < 0.0:
                        t = 0.0
                    elif t > 255.0:
                        t = 255.0
                    out[i, j, c] = <unsigned char> t
    return out_arr


def unmix(const double[:, :, ::1] od, const double[:, ::1] pinv):
    cdef Py_ssize_t h = od.shape[0], w = od.shape[1], n_s = pinv.shape[0]
    out_arr = np.empty((h, w, n_s), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, j, s
    cdef double acc
    with nogil:
        for i in range(h):
            for j in range(w):
                for s in range(n_s):
                    acc = od[i, j, 0] * pinv[s, 0]
                    acc = acc + od[i, j, 1] * pinv[s, 1]
                    acc = acc + od[i, j, 2] * pinv[s, 2]
                    out[i, j, s] = acc
    return out_arr


def mix(const double[:, :, ::1] conc, const double[:, ::1] m):
    cdef Py_ssize_t h = conc.shape[0], w = conc.shape[1], n_s = m.shape[1]
    out_arr = np.empty((h, w, 3), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, j, c, k
    cdef double acc
    with nogil:
        for i in range(h):
            for j in range(w):
                for c in range(3):
                    acc = conc[i, j, 0] * m[c, 0]
                    for k in range(1, n_s):
                        acc = acc + conc[i, j, k] * m[c, k]
                    out[i, j, c] = acc
    return out_arr
