"""Backend parity between the compiled kernels and the pure fallbacks."""

import numpy as np
import pytest

from citegraph import kernels


def slow_lcs(a, b):
    # quadratic reference with a full table, kept deliberately naive
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[len(a)][len(b)]


class TestBackendSelection:
    def test_backend_reported(self):
        assert kernels.BACKEND in ("cython", "python")

    def test_active_matches_fallback_cosine(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            m = rng.normal(size=(50, 12))
            q = rng.normal(size=12)
            active = kernels.cosine_scores(m, q)
            fallback = kernels.py_cosine_scores(m, q)
            assert np.allclose(active, fallback, rtol=1e-12, atol=1e-14)

    def test_active_matches_fallback_lcs(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            a = rng.integers(0, 5, size=rng.integers(0, 30)).tolist()
            b = rng.integers(0, 5, size=rng.integers(0, 30)).tolist()
            assert kernels.lcs_length(a, b) == kernels.py_lcs_length(a, b)


class TestCosineScores:
    def test_known_values(self):
        m = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        q = np.array([1.0, 0.0])
        scores = kernels.cosine_scores(m, q)
        assert scores == pytest.approx([1.0, 0.0, 1 / np.sqrt(2)])

    def test_zero_query_raises(self):
        with pytest.raises(ValueError):
            kernels.cosine_scores(np.ones((2, 3)), np.zeros(3))

    def test_zero_row_raises_with_index(self):
        m = np.array([[1.0, 1.0], [0.0, 0.0]])
        with pytest.raises(ValueError) as err:
            kernels.cosine_scores(m, np.ones(2))
        assert "index 1" in str(err.value)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            kernels.cosine_scores(np.ones((2, 3)), np.ones(4))


class TestLcs:
    def test_empty_sequences(self):
        assert kernels.lcs_length([], [1, 2]) == 0
        assert kernels.lcs_length([1], []) == 0

    def test_known_cases(self):
        assert kernels.lcs_length([1, 2, 3], [1, 2, 4]) == 2
        assert kernels.lcs_length([1, 2, 3], [3, 2, 1]) == 1
        assert kernels.lcs_length([1, 9, 2, 9, 3], [1, 2, 3]) == 3

    def test_against_naive_reference(self):
        rng = np.random.default_rng(2)
        for _ in range(15):
            a = rng.integers(0, 4, size=rng.integers(1, 25)).tolist()
            b = rng.integers(0, 4, size=rng.integers(1, 25)).tolist()
            assert kernels.lcs_length(a, b) == slow_lcs(a, b)
