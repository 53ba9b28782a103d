import os

import numpy as np
from setuptools import Extension, setup

# Set DSPIN_NO_EXT=1 to install the pure-Python kernels only.
ext_modules = []
if not os.environ.get("DSPIN_NO_EXT"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "dspin._ckernels",
                ["src/dspin/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
    )

setup(ext_modules=ext_modules)
