"""Build hooks for the optional compiled decode kernel.

The package works without the extension (a pure-Python kernel is selected at
import time); compilation failures must therefore never fail the install.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "kvcanon._kernels._decode",
                sources=["src/kvcanon/_kernels/_decode.pyx"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
