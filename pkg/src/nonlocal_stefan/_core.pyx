# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: direct convolution with zero extension and the
projected relaxation sweep for the biobstacle system.

Every inner sum runs over offsets in ascending order so the results are
bit-identical to the numpy fallback in ``_pure``.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def convolve_1d(const double[::1] mass, Py_ssize_t half, const double[::1] v):
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t nk = mass.shape[0]
    cdef Py_ssize_t i, k, j
    cdef double acc
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            acc = 0.0
            for k in range(nk):
                # offset = k - half, source index i - offset
                j = i - (k - half)
                if 0 <= j < n:
                    acc = acc + mass[k] * v[j]
            o[i] = acc
    return out


def convolve_2d(const double[::1] mass, const Py_ssize_t[:, ::1] offsets,
                const double[:, ::1] v):
    cdef Py_ssize_t nx = v.shape[0]
    cdef Py_ssize_t ny = v.shape[1]
    cdef Py_ssize_t nk = mass.shape[0]
    cdef Py_ssize_t i, j, k, a, b
    cdef double acc
    out = np.empty((nx, ny), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(nx):
            for j in range(ny):
                acc = 0.0
                for k in range(nk):
                    a = i - offsets[k, 0]
                    b = j - offsets[k, 1]
                    if 0 <= a < nx and 0 <= b < ny:
                        acc = acc + mass[k] * v[a, b]
                o[i, j] = acc
    return out


cdef inline double _relax(double g, double denom) nogil:
    if g > 1.0:
        return (g - 1.0) / denom
    if g < -1.0:
        return (g + 1.0) / denom
    return 0.0


def bop_sweep_1d(const double[::1] mass, Py_ssize_t half, const double[::1] f,
                 double[::1] w, bint forward=True):
    """One in-place sweep; returns the largest nodewise update."""
    cdef Py_ssize_t n = w.shape[0]
    cdef Py_ssize_t nk = mass.shape[0]
    cdef Py_ssize_t step, i, k, j
    cdef double rest, new, diff, biggest = 0.0
    cdef double denom = 1.0 - mass[half]
    with nogil:
        for step in range(n):
            i = step if forward else n - 1 - step
            rest = 0.0
            for k in range(nk):
                if k == half:
                    continue
                j = i - (k - half)
                if 0 <= j < n:
                    rest = rest + mass[k] * w[j]
            new = _relax(f[i] + rest, denom)
            diff = new - w[i]
            if diff < 0:
                diff = -diff
            if diff > biggest:
                biggest = diff
            w[i] = new
    return biggest


def bop_sweep_2d(const double[::1] mass, const Py_ssize_t[:, ::1] offsets,
                 Py_ssize_t centre, const double[:, ::1] f, double[:, ::1] w,
                 bint forward=True):
    cdef Py_ssize_t nx = w.shape[0]
    cdef Py_ssize_t ny = w.shape[1]
    cdef Py_ssize_t nk = mass.shape[0]
    cdef Py_ssize_t step, i, j, k, a, b
    cdef double rest, new, diff, biggest = 0.0
    cdef double denom = 1.0 - mass[centre]
    with nogil:
        for step in range(nx * ny):
            if forward:
                i = step // ny
                j = step % ny
            else:
                i = nx - 1 - step // ny
                j = ny - 1 - step % ny
            rest = 0.0
            for k in range(nk):
                if k == centre:
                    continue
                a = i - offsets[k, 0]
                b = j - offsets[k, 1]
                if 0 <= a < nx and 0 <= b < ny:
                    rest = rest + mass[k] * w[a, b]
            new = _relax(f[i, j] + rest, denom)
            diff = new - w[i, j]
            if diff < 0:
                diff = -diff
            if diff > biggest:
                biggest = diff
            w[i, j] = new
    return biggest
