# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels; must match ``_pykernels`` exactly."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def neighbor_sum(const double[:, ::1] reps, const cnp.int64_t[:, ::1] neighbors):
    cdef Py_ssize_t n = reps.shape[0], d = reps.shape[1], k = neighbors.shape[1]
    cdef Py_ssize_t v, j, c
    cdef cnp.int64_t u
    out_arr = np.array(reps, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] out = out_arr
    for v in range(n):
        # same summation order as the numpy fallback: self, then slot 0, 1, ...
        for j in range(k):
            u = neighbors[v, j]
            if u < 0:
                continue
            for c in range(d):
                out[v, c] += reps[u, c]
    return out_arr


def masked_rowmax(const double[:, ::1] mat, const double[::1] row_mask, const double[::1] col_mask):
    cdef Py_ssize_t m = mat.shape[0], n = mat.shape[1], i, j
    cdef double best
    cdef cnp.int64_t arg
    values_arr = np.zeros(m, dtype=np.float64)
    argmax_arr = np.full(m, -1, dtype=np.int64)
    cdef double[::1] values = values_arr
    cdef cnp.int64_t[::1] argmax = argmax_arr
    for i in range(m):
        if row_mask[i] <= 0:
            continue
        arg = -1
        best = 0.0
        for j in range(n):
            if col_mask[j] <= 0:
                continue
            if arg < 0 or mat[i, j] > best:
                best = mat[i, j]
                arg = j
        if arg >= 0:
            values[i] = best
            argmax[i] = arg
    return values_arr, argmax_arr
