"""Build script for the optional compiled LSTM kernels.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so a failed compile downgrades to a warning
instead of aborting the install.
"""

import sys

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    extensions = cythonize(
        [
            Extension(
                "carriertag.nn._lstm_cy",
                ["src/carriertag/nn/_lstm_cy.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"warning: compiled kernels disabled ({exc}); using numpy fallback", file=sys.stderr)
    extensions = []

setup(ext_modules=extensions)
