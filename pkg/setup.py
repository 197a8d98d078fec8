"""Build script for the optional compiled demodulation kernel.

The package is fully functional without the extension (a vectorized numpy
fallback is selected at import time); building it just makes the per-shot
Monte Carlo loop faster. `optional=True` keeps installation working on
hosts without a C toolchain.
"""
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
    import numpy

    ext_modules = cythonize(
        [
            Extension(
                "qfsim._kernel",
                ["src/qfsim/_kernel.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # -ffp-contract=off keeps the C arithmetic bit-identical to the
                # numpy fallback (no FMA contraction of a*b+c).
                extra_compile_args=["-O3", "-ffp-contract=off"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
