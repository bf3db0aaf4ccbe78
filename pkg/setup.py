"""Build script: compiles the BLAS-backed convolution core when possible.

The extension is optional. If Cython or a C compiler is unavailable the
package installs anyway and melvoc.kernels falls back to the numpy
implementation at import time.

Build in place with:  python setup.py build_ext --inplace
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "melvoc.kernels._blas_core",
                ["src/melvoc/kernels/_blas_core.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
