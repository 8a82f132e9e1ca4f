"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (pure-Python fallbacks are selected
at import time), so any compilation failure downgrades to a plain install
instead of aborting.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "citegraph.kernels._ckernels",
                ["src/citegraph/kernels/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"citegraph: skipping Cython kernels ({exc}); pure-Python fallback will be used")

setup(ext_modules=ext_modules)
