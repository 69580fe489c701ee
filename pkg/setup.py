"""Build the optional Cython string-similarity kernel.

If Cython or a C compiler is unavailable the build falls through and the
package uses the pure-Python implementation selected at import time.
"""

from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/matchfuse/_jaro_c.pyx"],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
