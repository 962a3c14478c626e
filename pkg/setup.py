"""Build script for the optional compiled value-iteration kernel.

The package works without the extension (a pure-Python fallback is selected
at import time); set PRTSPACE_NO_EXT=1 to skip compilation entirely.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("PRTSPACE_NO_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "prtspace._kernel._layered_c",
                    ["src/prtspace/_kernel/_layered_c.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
