"""Build script: compiles the optional Cython phase-space kernel.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed compilation only costs speed.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "tfrct._phase_kernel_cy",
                ["src/tfrct/_phase_kernel_cy.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
