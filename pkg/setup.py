"""Build hook for the optional compiled kernel core.

The package works without the extension (a pure-Python fallback is selected
at import time); building it just makes the hot simulation/update kernels
faster.  Set SARMISSION_SKIP_EXT=1 to force a pure-Python install.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("SARMISSION_SKIP_EXT"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "sarmission.kernels._core",
                    ["src/sarmission/kernels/_core.pyx"],
                    extra_compile_args=["-O2"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
