# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: fused cosine scoring and the LCS table."""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def cosine_scores(matrix, query):
    """Cosine similarity of ``query`` against every row of ``matrix``."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] m = np.ascontiguousarray(
        matrix, dtype=np.float64
    )
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] q = np.ascontiguousarray(
        query, dtype=np.float64
    )
    if m.ndim != 2 or m.shape[1] != q.shape[0]:
        raise ValueError(
            f"shape mismatch: matrix ({m.shape[0]}, {m.shape[1]}) vs query ({q.shape[0]},)"
        )
    cdef Py_ssize_t n = m.shape[0]
    cdef Py_ssize_t d = m.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double qnorm = 0.0
    cdef double dot, norm, v
    cdef Py_ssize_t i, j
    for j in range(d):
        qnorm += q[j] * q[j]
    qnorm = sqrt(qnorm)
    if qnorm == 0.0:
        raise ValueError("zero-norm query vector")
    for i in range(n):
        dot = 0.0
        norm = 0.0
        for j in range(d):
            v = m[i, j]
            dot += v * q[j]
            norm += v * v
        if norm == 0.0:
            raise ValueError(f"zero-norm row at index {i}")
        out[i] = dot / (sqrt(norm) * qnorm)
    return out


def lcs_length(a, b):
    """Length of the longest common subsequence of two token-id sequences."""
    cdef cnp.ndarray[cnp.int64_t, ndim=1] x = np.ascontiguousarray(a, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] y = np.ascontiguousarray(b, dtype=np.int64)
    cdef Py_ssize_t la = x.shape[0]
    cdef Py_ssize_t lb = y.shape[0]
    if la == 0 or lb == 0:
        return 0
    if lb > la:
        x, y = y, x
        la, lb = lb, la
    cdef cnp.ndarray[cnp.int64_t, ndim=1] prev = np.zeros(lb + 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cur = np.zeros(lb + 1, dtype=np.int64)
    cdef Py_ssize_t i, j
    cdef cnp.int64_t ai, left, up
    for i in range(1, la + 1):
        ai = x[i - 1]
        for j in range(1, lb + 1):
            if ai == y[j - 1]:
                cur[j] = prev[j - 1] + 1
            else:
                left = cur[j - 1]
                up = prev[j]
                cur[j] = left if left >= up else up
        prev, cur = cur, prev
    return int(prev[lb])
