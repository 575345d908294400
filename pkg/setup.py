import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

ext_modules = [
    Extension(
        "vcselrng._core",
        ["src/vcselrng/_core.pyx"],
        include_dirs=[np.get_include()],
        # no FMA contraction: the extractor must agree bit-for-bit with the numpy reference
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(ext_modules, language_level=3),
)
