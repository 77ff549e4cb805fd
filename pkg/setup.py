"""Build script: compiles the optional fast-kernel extension when Cython is available.

The package is fully functional without the extension; `inquest.kernels`
falls back to the pure-Python twin at import time.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/inquest/kernels/_fast.pyx"],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
        },
    )
except ImportError:
    print("Cython not available; building without the compiled kernel core.")

setup(ext_modules=ext_modules)
