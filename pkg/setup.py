"""Build script: compiles the optional Cython chain kernel.

The package works without the extension (a pure-numpy backend is selected
at import time), so any build failure here is demoted to a warning.
"""

import os
import sys

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    rand_lib = os.path.join(os.path.dirname(np.random.__file__), "lib")
    ext_modules = cythonize(
        [
            Extension(
                "plmc.samplers._kernels",
                ["src/plmc/samplers/_kernels.pyx"],
                include_dirs=[np.get_include()],
                library_dirs=[rand_lib],
                libraries=["npyrandom"],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"warning: compiled kernel disabled ({exc}); "
          "falling back to the pure-python backend", file=sys.stderr)

setup(ext_modules=ext_modules)
