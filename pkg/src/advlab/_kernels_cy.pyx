# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled training-loop hot kernels.

Semantics must match _kernels_np exactly: first-max tie-breaking, the same
max-shifted softmax formula. GEMM stays with BLAS via numpy upstream; these
kernels fuse the elementwise/reduction passes between the matmuls.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()

BACKEND = "cython"


def maxout_reduce(double[:, :, ::1] z):
    cdef Py_ssize_t b = z.shape[0], h = z.shape[1], k = z.shape[2]
    cdef cnp.ndarray hmax_arr = np.empty((b, h), dtype=np.float64)
    cdef cnp.ndarray amax_arr = np.empty((b, h), dtype=np.int64)
    cdef double[:, ::1] hmax = hmax_arr
    cdef long long[:, ::1] amax = amax_arr
    cdef Py_ssize_t i, j, p, best
    cdef double v, cur
    for i in range(b):
        for j in range(h):
            best = 0
            v = z[i, j, 0]
            for p in range(1, k):
                cur = z[i, j, p]
                if cur > v:
                    v = cur
                    best = p
            hmax[i, j] = v
            amax[i, j] = best
    return hmax_arr, amax_arr


def maxout_scatter(double[:, ::1] dh, long long[:, ::1] amax, Py_ssize_t k):
    cdef Py_ssize_t b = dh.shape[0], h = dh.shape[1]
    cdef cnp.ndarray dz_arr = np.zeros((b, h, k), dtype=np.float64)
    cdef double[:, :, ::1] dz = dz_arr
    cdef Py_ssize_t i, j
    for i in range(b):
        for j in range(h):
            dz[i, j, amax[i, j]] = dh[i, j]
    return dz_arr


def softmax_xent(double[:, ::1] logits, labels=None):
    cdef Py_ssize_t b = logits.shape[0], c = logits.shape[1]
    cdef cnp.ndarray probs_arr = np.empty((b, c), dtype=np.float64)
    cdef double[:, ::1] probs = probs_arr
    cdef Py_ssize_t i, j
    cdef double m, s, v
    if labels is None:
        for i in range(b):
            m = logits[i, 0]
            for j in range(1, c):
                if logits[i, j] > m:
                    m = logits[i, j]
            s = 0.0
            for j in range(c):
                v = exp(logits[i, j] - m)
                probs[i, j] = v
                s += v
            for j in range(c):
                probs[i, j] /= s
        return probs_arr, None, None

    cdef long long[::1] lab = np.ascontiguousarray(labels, dtype=np.int64)
    cdef cnp.ndarray losses_arr = np.empty(b, dtype=np.float64)
    cdef cnp.ndarray dlogits_arr = np.empty((b, c), dtype=np.float64)
    cdef double[::1] losses = losses_arr
    cdef double[:, ::1] dlogits = dlogits_arr
    for i in range(b):
        m = logits[i, 0]
        for j in range(1, c):
            if logits[i, j] > m:
                m = logits[i, j]
        s = 0.0
        for j in range(c):
            v = exp(logits[i, j] - m)
            probs[i, j] = v
            s += v
        for j in range(c):
            probs[i, j] /= s
        losses[i] = (m + log(s)) - logits[i, lab[i]]
        for j in range(c):
            dlogits[i, j] = probs[i, j]
        dlogits[i, lab[i]] -= 1.0
    return probs_arr, losses_arr, dlogits_arr
