# python3 setup.py build_ext --inplace
import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("HYPEROCC_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "hyperocc._kernels",
                    ["src/hyperocc/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
