"""Build script for the optional compiled delta-scan kernel.

The package works without the extension (a pure-Python kernel is selected
at import time); building it makes patch computation on large APKs roughly
an order of magnitude faster.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "appgrease.delta._scan",
                ["src/appgrease/delta/_scan.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
