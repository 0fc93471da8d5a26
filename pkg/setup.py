"""Build script for the optional compiled decision kernel.

The package works without the extension (a numpy fallback is selected at
import time); `python setup.py build_ext --inplace` or a normal pip install
builds the fast path.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:  # pure-Python install still works
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "scansim._kernels._decision_cy",
                ["src/scansim/_kernels/_decision_cy.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # fp-contract off: no FMA fusing, so the compiled kernel rounds
                # every operation exactly like the numpy fallback
                extra_compile_args=["-O3", "-ffp-contract=off"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules, zip_safe=False)
