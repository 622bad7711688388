import os

from setuptools import setup
from setuptools.extension import Extension

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "celltx.kernel._native",
        ["src/celltx/kernel/_native.pyx"],
        extra_compile_args=["-O3"],
    )
]

# The package works without the extension (NumPy fallback is selected at
# import time), so allow building without Cython or a C compiler.
if cythonize is None or os.environ.get("CELLTX_SKIP_NATIVE"):
    setup()
else:
    setup(ext_modules=cythonize(extensions, language_level=3))
