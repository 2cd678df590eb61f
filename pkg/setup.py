import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("HUFFREV_NO_EXT"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "huffrev._ckeccak",
                ["src/huffrev/_ckeccak.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
