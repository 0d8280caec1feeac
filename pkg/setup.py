"""Build script for the optional compiled pair-interaction kernels.

The extension is marked optional: if Cython or a C compiler is missing the
install still succeeds and the package falls back to the pure-numpy kernels
in ``hydrolim._fallback`` (selected at import time by ``hydrolim._backend``).
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext = Extension(
        "hydrolim._kernels",
        ["src/hydrolim/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3", "-fopenmp"],
        extra_link_args=["-fopenmp"],
    )
    ext_modules = cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )
    for mod in ext_modules:
        mod.optional = True
except ImportError:
    pass

setup(ext_modules=ext_modules)
