"""Hot numeric kernels with a compiled core and a pure-Python fallback.

Two operations dominate runtime at corpus scale: scoring a query against
every candidate row (exact cosine ranking) and the longest-common-subsequence
table behind ROUGE-L. Both ship as a Cython extension compiled at install
time; when the extension is unavailable the pure implementations in
``_pykernels`` are used instead. ``BACKEND`` records which one was selected.

Run ``python benchmarks/bench_kernels.py`` from the repository root to
compare the two backends.
"""

from . import _pykernels

try:  # compiled core, built by setup.py when Cython + a C compiler exist
    from . import _ckernels  # type: ignore[attr-defined]

    BACKEND = "cython"
    cosine_scores = _ckernels.cosine_scores
    lcs_length = _ckernels.lcs_length
except ImportError:  # pragma: no cover - exercised on installs without the extension
    BACKEND = "python"
    cosine_scores = _pykernels.cosine_scores
    lcs_length = _pykernels.lcs_length

# Fallbacks stay importable under stable names so tests and benchmarks can
# compare the two implementations directly.
py_cosine_scores = _pykernels.cosine_scores
py_lcs_length = _pykernels.lcs_length

__all__ = [
    "BACKEND",
    "cosine_scores",
    "lcs_length",
    "py_cosine_scores",
    "py_lcs_length",
]
