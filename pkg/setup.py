from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        Extension(
            "restain._kernels",
            ["src/restain/_kernels.pyx"],
            include_dirs=[np.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        ),
        language_level=3,
    )
except ImportError:
    # No Cython/numpy at build time: install pure-Python only. The package
    # falls back to the numpy kernels at import.
    ext_modules = []

setup(ext_modules=ext_modules)
