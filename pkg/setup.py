"""Build script for the optional compiled signature kernel.

The package works without the extension (a pure-numpy fallback is selected at
import time); building it just makes the signature basis fast.
"""

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "amcpricer._sigcore",
        sources=["src/amcpricer/_sigcore.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(extensions, language_level=3),
)
