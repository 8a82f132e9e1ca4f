"""Pure-Python/numpy reference implementations of the hot kernels."""

from __future__ import annotations

import numpy as np


def cosine_scores(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Cosine similarity of ``query`` against every row of ``matrix``.

    Raises ValueError if the query or any row has zero norm; callers turn
    that into a domain error naming the offending record.
    """
    matrix = np.ascontiguousarray(matrix, dtype=np.float64)
    query = np.ascontiguousarray(query, dtype=np.float64)
    if matrix.ndim != 2 or query.ndim != 1 or matrix.shape[1] != query.shape[0]:
        raise ValueError(
            f"shape mismatch: matrix {matrix.shape} vs query {query.shape}"
        )
    qnorm = float(np.sqrt(query @ query))
    if qnorm == 0.0:
        raise ValueError("zero-norm query vector")
    row_norms = np.sqrt(np.einsum("ij,ij->i", matrix, matrix))
    zero = np.flatnonzero(row_norms == 0.0)
    if zero.size:
        raise ValueError(f"zero-norm row at index {int(zero[0])}")
    return (matrix @ query) / (row_norms * qnorm)


def lcs_length(a, b) -> int:
    """Length of the longest common subsequence of two token-id sequences."""
    a = list(a)
    b = list(b)
    if not a or not b:
        return 0
    if len(b) > len(a):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    cur = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        ai = a[i - 1]
        for j in range(1, len(b) + 1):
            if ai == b[j - 1]:
                cur[j] = prev[j - 1] + 1
            else:
                left = cur[j - 1]
                up = prev[j]
                cur[j] = left if left >= up else up
        prev, cur = cur, prev
    return prev[len(b)]
