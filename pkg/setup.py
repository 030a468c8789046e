"""Build script for the optional compiled kernels.

The package is fully functional without the extension: ttsplateau.kernels
falls back to the pure-Python implementation when the compiled module is
missing (see src/ttsplateau/kernels/__init__.py).
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "ttsplateau.kernels._fast",
                ["src/ttsplateau/kernels/_fast.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level="3",
    )

setup(ext_modules=ext_modules)
