"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (pure-Python kernels are selected
at import time), so a failed compile downgrades to a warning instead of
aborting the install.
"""

import sys

from setuptools import Extension, setup


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        print(f"uavfog: Cython/numpy unavailable ({exc}); "
              "building without compiled kernels", file=sys.stderr)
        return []
    return cythonize(
        [
            Extension(
                "uavfog._kernels._core",
                ["src/uavfog/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )


setup(ext_modules=_extensions())
