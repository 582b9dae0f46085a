# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops for the Monte-Carlo simulator."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, floor, fabs, sqrt

cnp.import_array()

cdef double LN2 = 0.6931471805599453


def logdet_hpd(a):
    """log2 det of a batch of Hermitian positive definite matrices.

    ``a`` has shape ``(..., n, n)``; the result has shape ``a.shape[:-2]``.
    Uses an in-place Cholesky factorisation; raises ``LinAlgError`` if a
    matrix is not positive definite.
    """
    a = np.asarray(a)
    shape = a.shape
    cdef Py_ssize_t n = shape[len(shape) - 1]
    work = np.ascontiguousarray(a, dtype=np.complex128).reshape(-1, n, n).copy()
    cdef double complex[:, :, ::1] w = work
    cdef Py_ssize_t nb = w.shape[0]
    out = np.empty(nb, dtype=np.float64)
    cdef double[::1] res = out
    cdef Py_ssize_t b, i, j, k
    cdef double d, acc
    cdef double complex s
    for b in range(nb):
        acc = 0.0
        for j in range(n):
            d = w[b, j, j].real
            for k in range(j):
                d -= w[b, j, k].real * w[b, j, k].real + w[b, j, k].imag * w[b, j, k].imag
            if d <= 0.0:
                raise np.linalg.LinAlgError("matrix is not positive definite")
            d = sqrt(d)
            w[b, j, j] = d
            acc += log(d)
            for i in range(j + 1, n):
                s = w[b, i, j]
                for k in range(j):
                    s = s - w[b, i, k] * w[b, j, k].conjugate()
                w[b, i, j] = s / d
        res[b] = 2.0 * acc / LN2
    return out.reshape(shape[:len(shape) - 2])


def uniform_quantize(values, double clip, long levels):
    """Midpoint uniform quantizer on ``[-clip, clip]`` with ``levels`` cells.

    Returns ``(indices, reconstruction, n_clipped)``.
    """
    values = np.asarray(values)
    flat = np.ascontiguousarray(values, dtype=np.float64).ravel()
    cdef double[::1] v = flat
    cdef Py_ssize_t n = v.shape[0], i
    idx_arr = np.empty(n, dtype=np.int64)
    rec_arr = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] idx = idx_arr
    cdef double[::1] rec = rec_arr
    cdef double step = 2.0 * clip / levels
    cdef long q
    cdef long clipped = 0
    for i in range(n):
        if fabs(v[i]) > clip:
            clipped += 1
        q = <long> floor((v[i] + clip) / step)
        if q < 0:
            q = 0
        elif q > levels - 1:
            q = levels - 1
        idx[i] = q
        rec[i] = -clip + (q + 0.5) * step
    return idx_arr.reshape(values.shape), rec_arr.reshape(values.shape), int(clipped)
