"""Build script: compiles the pair-scan extension when Cython is available.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed compile is not fatal to installation.
"""
from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "pimlap._pairscan_cy",
                ["src/pimlap/_pairscan_cy.pyx"],
                include_dirs=[np.get_include()],
                # -ffp-contract=off keeps scalar arithmetic bit-identical
                # with the NumPy fallback (no FMA contraction).
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
