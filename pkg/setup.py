import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; the fallback kernels are used
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("FLOATLOC_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "floatloc._kernels._ckernels",
                ["src/floatloc/_kernels/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
