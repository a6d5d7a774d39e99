"""Build script for the optional compiled stepping kernel.

The package is fully functional without the extension (a pure NumPy
kernel is selected at import time); building it just makes long seed
sweeps faster. If Cython is unavailable the extension is skipped.
"""

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "lsasim._kernel",
                ["src/lsasim/_kernel.pyx"],
                include_dirs=[numpy.get_include()],
                # -ffp-contract=off keeps the C arithmetic bit-identical to
                # the NumPy fallback (no fused multiply-add contraction).
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
