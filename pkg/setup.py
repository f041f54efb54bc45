import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

ext = Extension(
    "agentsim._speedups",
    ["src/agentsim/_speedups.pyx"],
    include_dirs=[np.get_include()],
)

setup(
    ext_modules=cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": False,  # keep IEEE division semantics identical to CPython
        },
    ),
)
