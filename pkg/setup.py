import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("POSAUCTION_PURE"):
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "posauction._fast",
                    sources=["src/posauction/_fast.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "language_level": "3",
            },
        )
    except ImportError:
        # No Cython toolchain: install the pure-Python kernels only.
        ext_modules = []

setup(ext_modules=ext_modules)
