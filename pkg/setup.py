"""Build script: compiles the Cython kernels when possible.

If Cython or a C compiler is missing the package still installs and runs on
the pure-Python kernels.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("BWTMERGE_NO_EXTENSION") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "bwtmerge._kernels",
                    ["src/bwtmerge/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
