"""Build script for the optional compiled kernel core.

The package is fully functional without the extension (a pure numpy/python
fallback is selected at import time); if Cython or a C compiler is missing
the build continues without it.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext = Extension(
        "particle._kernels._core",
        ["src/particle/_kernels/_core.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    ext_modules = cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except Exception as exc:  # pragma: no cover - build-env dependent
    sys.stderr.write(f"warning: compiled kernels disabled ({exc})\n")

setup(ext_modules=ext_modules)
