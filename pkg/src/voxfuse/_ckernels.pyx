# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled window kernels; see ``_pykernels`` for the reference semantics."""
import numpy as np

cimport numpy as cnp
from libc.stdint cimport int64_t, uint8_t

cnp.import_array()


def padded_sat(const uint8_t[:, :, :] mask):
    cdef Py_ssize_t nx = mask.shape[0], ny = mask.shape[1], nz = mask.shape[2]
    out_arr = np.zeros((nx + 1, ny + 1, nz + 1), dtype=np.int64)
    cdef int64_t[:, :, ::1] s = out_arr
    cdef Py_ssize_t i, j, k
    cdef int64_t row
    with nogil:
        for i in range(nx):
            for j in range(ny):
                row = 0
                for k in range(nz):
                    row = row + mask[i, j, k]
                    s[i + 1, j + 1, k + 1] = row + s[i + 1, j, k + 1] + s[i, j + 1, k + 1] - s[i, j, k + 1]
    return out_arr


cdef inline int64_t _box(int64_t[:, :, ::1] s, Py_ssize_t x0, Py_ssize_t y0, Py_ssize_t z0,
                         Py_ssize_t x1, Py_ssize_t y1, Py_ssize_t z1) noexcept nogil:
    return (s[x1, y1, z1] - s[x0, y1, z1] - s[x1, y0, z1] - s[x1, y1, z0]
            + s[x0, y0, z1] + s[x0, y1, z0] + s[x1, y0, z0] - s[x0, y0, z0])


def mark_passing(int64_t[:, :, ::1] sat_all, int64_t[:, :, ::1] sat_any, Py_ssize_t w,
                 double tau, Py_ssize_t stride, Py_ssize_t z0, Py_ssize_t z1,
                 uint8_t[:, :, :] out):
    cdef Py_ssize_t nx = out.shape[0], ny = out.shape[1], nz = out.shape[2]
    cdef Py_ssize_t i, j, k, k_start
    cdef int64_t inter, union
    k_start = ((z0 + stride - 1) // stride) * stride
    if z1 > nz:
        z1 = nz
    with nogil:
        i = 0
        while i < nx:
            j = 0
            while j < ny:
                k = k_start
                while k < z1:
                    union = _box(sat_any, i, j, k, min(i + w, nx), min(j + w, ny), min(k + w, nz))
                    if union > 0:
                        inter = _box(sat_all, i, j, k, min(i + w, nx), min(j + w, ny), min(k + w, nz))
                        out[i, j, k] = <double>inter >= tau * <double>union
                    else:
                        out[i, j, k] = 0
                    k += stride
                j += stride
            i += stride


def gate_covered(int64_t[:, :, ::1] sat_pass, const uint8_t[:, :, :] any_mask,
                 Py_ssize_t w, Py_ssize_t z0, Py_ssize_t z1, uint8_t[:, :, :] out):
    cdef Py_ssize_t nx = any_mask.shape[0], ny = any_mask.shape[1]
    cdef Py_ssize_t i, j, k
    with nogil:
        for i in range(nx):
            for j in range(ny):
                for k in range(z0, z1):
                    if any_mask[i, j, k] and _box(sat_pass, max(i - w + 1, 0), max(j - w + 1, 0),
                                                  max(k - w + 1, 0), i + 1, j + 1, k + 1) > 0:
                        out[i, j, k] = 1
                    else:
                        out[i, j, k] = 0
