from setuptools import Extension, setup
from Cython.Build import cythonize

ext = Extension(
    "quadgemm._kernels",
    sources=["src/quadgemm/_kernels.pyx", "src/quadgemm/quad_kernels.c"],
    extra_compile_args=["-O2"],
)

setup(ext_modules=cythonize([ext], language_level=3))
