"""Build script: compiles the optional fast kernel extension.

The package is fully functional without the extension (a pure-numpy
fallback is selected at import time), so any failure here degrades to
a source-only install instead of aborting.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "infohedge._kernels._fastcore",
                ["src/infohedge/_kernels/_fastcore.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-env dependent
    print(f"infohedge: skipping compiled kernels ({exc}); pure-python fallback will be used")

setup(ext_modules=ext_modules)
