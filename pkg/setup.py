import os

from setuptools import Extension, setup


def _extensions():
    if os.environ.get("PHAVFORGE_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "phavforge._core._kernels",
        ["src/phavforge/_core/_kernels.pyx"],
        # no FMA contraction: the compiled kernel must match the fallback bit for bit
        extra_compile_args=["-O2", "-ffp-contract=off"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=_extensions())
