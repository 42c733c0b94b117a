"""Build script for the optional compiled sHD kernel.

The package works without the extension: ousim.kernels falls back to a
numpy implementation if the import fails.
"""
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
    import numpy

    ext_modules = cythonize(
        [
            Extension(
                "ousim._shd_cy",
                ["src/ousim/_shd_cy.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
