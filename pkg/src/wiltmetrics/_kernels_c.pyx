# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the per-pixel hot kernels.

Semantics mirror ``_kernels_py`` exactly; see that module for the
reference definitions.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cbrt, fmod, pow

cnp.import_array()

BACKEND = "cython"

cdef double _R2X00 = 0.4124564, _R2X01 = 0.3575761, _R2X02 = 0.1804375
cdef double _R2X10 = 0.2126729, _R2X11 = 0.7151522, _R2X12 = 0.0721750
cdef double _R2X20 = 0.0193339, _R2X21 = 0.1191920, _R2X22 = 0.9503041
cdef double _WX = 0.95047, _WY = 1.0, _WZ = 1.08883


def srgb_to_hsv_planes(image):
    arr = np.ascontiguousarray(image, dtype=np.uint8)
    cdef cnp.uint8_t[:, :, ::1] img = arr
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    out_arr = np.empty((h, w, 3), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t y, x
    cdef double r, g, b, mx, mn, delta, hue, sat
    for y in range(h):
        for x in range(w):
            r = img[y, x, 0]
            g = img[y, x, 1]
            b = img[y, x, 2]
            mx = r if r > g else g
            if b > mx:
                mx = b
            mn = r if r < g else g
            if b < mn:
                mn = b
            delta = mx - mn
            sat = delta / mx * 255.0 if mx > 0 else 0.0
            if delta > 0:
                # tie precedence b > g > r, matching the numpy reference
                if mx == b:
                    hue = 4.0 + ((mx - g) / delta) - ((mx - r) / delta)
                elif mx == g:
                    hue = 2.0 + ((mx - r) / delta) - ((mx - b) / delta)
                else:
                    hue = ((mx - b) / delta) - ((mx - g) / delta)
                hue = fmod(hue / 6.0, 1.0)
                if hue < 0:
                    hue += 1.0
            else:
                hue = 0.0
            out[y, x, 0] = hue * 255.0
            out[y, x, 1] = sat
            out[y, x, 2] = mx
    return out_arr


cdef inline double _gamma_expand(double c) noexcept:
    if c <= 0.04045:
        return c / 12.92
    return pow((c + 0.055) / 1.055, 2.4)


# 8-bit inputs admit only 256 gamma values; precompute them once
cdef double[256] _GAMMA_LUT
cdef int _i
for _i in range(256):
    _GAMMA_LUT[_i] = _gamma_expand(_i / 255.0)


cdef inline double _lab_f(double t) noexcept:
    cdef double eps = (6.0 / 29.0) ** 3
    if t > eps:
        return cbrt(t)
    return t / (3.0 * (6.0 / 29.0) ** 2) + 4.0 / 29.0


def srgb_to_lab_planes(image):
    arr = np.ascontiguousarray(image, dtype=np.uint8)
    cdef cnp.uint8_t[:, :, ::1] img = arr
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    out_arr = np.empty((h, w, 3), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t y, x
    cdef double r, g, b, X, Y, Z, fx, fy, fz
    for y in range(h):
        for x in range(w):
            r = _GAMMA_LUT[img[y, x, 0]]
            g = _GAMMA_LUT[img[y, x, 1]]
            b = _GAMMA_LUT[img[y, x, 2]]
            X = _R2X00 * r + _R2X01 * g + _R2X02 * b
            Y = _R2X10 * r + _R2X11 * g + _R2X12 * b
            Z = _R2X20 * r + _R2X21 * g + _R2X22 * b
            fx = _lab_f(X / _WX)
            fy = _lab_f(Y / _WY)
            fz = _lab_f(Z / _WZ)
            out[y, x, 0] = (116.0 * fy - 16.0) * 255.0 / 100.0
            out[y, x, 1] = 500.0 * (fx - fy) + 128.0
            out[y, x, 2] = 200.0 * (fy - fz) + 128.0
    return out_arr


# a square SE factors into a horizontal then a vertical segment, turning
# the O(se^2) window test into two O(se) passes

cdef void _erode_rows(cnp.uint8_t[:, ::1] src, cnp.uint8_t[:, ::1] dst,
                      Py_ssize_t h, Py_ssize_t w, Py_ssize_t r) noexcept:
    cdef Py_ssize_t y, x, dx, xx
    cdef int keep
    for y in range(h):
        for x in range(w):
            keep = 1
            for dx in range(-r, r + 1):
                xx = x + dx
                if xx < 0 or xx >= w or src[y, xx] == 0:
                    keep = 0
                    break
            dst[y, x] = keep


cdef void _erode_cols(cnp.uint8_t[:, ::1] src, cnp.uint8_t[:, ::1] dst,
                      Py_ssize_t h, Py_ssize_t w, Py_ssize_t r) noexcept:
    cdef Py_ssize_t y, x, dy, yy
    cdef int keep
    for y in range(h):
        for x in range(w):
            keep = 1
            for dy in range(-r, r + 1):
                yy = y + dy
                if yy < 0 or yy >= h or src[yy, x] == 0:
                    keep = 0
                    break
            dst[y, x] = keep


cdef void _dilate_rows(cnp.uint8_t[:, ::1] src, cnp.uint8_t[:, ::1] dst,
                       Py_ssize_t h, Py_ssize_t w, Py_ssize_t r) noexcept:
    cdef Py_ssize_t y, x, dx, xx
    cdef int hit
    for y in range(h):
        for x in range(w):
            hit = 0
            for dx in range(-r, r + 1):
                xx = x + dx
                if 0 <= xx < w and src[y, xx]:
                    hit = 1
                    break
            dst[y, x] = hit


cdef void _dilate_cols(cnp.uint8_t[:, ::1] src, cnp.uint8_t[:, ::1] dst,
                       Py_ssize_t h, Py_ssize_t w, Py_ssize_t r) noexcept:
    cdef Py_ssize_t y, x, dy, yy
    cdef int hit
    for y in range(h):
        for x in range(w):
            hit = 0
            for dy in range(-r, r + 1):
                yy = y + dy
                if 0 <= yy < h and src[yy, x]:
                    hit = 1
                    break
            dst[y, x] = hit


def erode(mask, se_size):
    arr = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] m = arr
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1]
    cdef Py_ssize_t r = se_size // 2
    tmp_arr = np.empty((h, w), dtype=np.uint8)
    out_arr = np.empty((h, w), dtype=np.uint8)
    _erode_rows(m, tmp_arr, h, w, r)
    _erode_cols(tmp_arr, out_arr, h, w, r)
    return out_arr


def dilate(mask, se_size):
    arr = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] m = arr
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1]
    cdef Py_ssize_t r = se_size // 2
    tmp_arr = np.empty((h, w), dtype=np.uint8)
    out_arr = np.empty((h, w), dtype=np.uint8)
    _dilate_rows(m, tmp_arr, h, w, r)
    _dilate_cols(tmp_arr, out_arr, h, w, r)
    return out_arr
