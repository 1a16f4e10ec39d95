import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# The compiled click-assembly kernel is optional: if no C compiler is
# available the package falls back to the pure-numpy implementation in
# heraldsim._assembly_py (selected at import time).
ext = Extension(
    "heraldsim._assembly",
    ["src/heraldsim/_assembly.pyx"],
    include_dirs=[np.get_include()],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    optional=True,
)

setup(ext_modules=cythonize([ext], language_level="3"))
