import os

import numpy
from setuptools import Extension, setup

ext_modules = []
pyx = os.path.join("src", "eitdsm", "_kernels.pyx")
if os.path.exists(pyx):
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "eitdsm._kernels",
                    [pyx],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )

setup(ext_modules=ext_modules)
