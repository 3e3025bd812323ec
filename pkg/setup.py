import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the compiled kernels when possible; the package falls back to
    the numpy implementations if the extension is missing."""

    def run(self):
        try:
            super().run()
        except Exception as exc:
            sys.stderr.write(f"coocnet: skipping compiled kernels ({exc})\n")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            sys.stderr.write(f"coocnet: skipping {ext.name} ({exc})\n")


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools.extension import Extension
    except ImportError as exc:
        sys.stderr.write(f"coocnet: pure-python build, no Cython/numpy ({exc})\n")
        return []
    return cythonize(
        [
            Extension(
                "coocnet._kernels",
                ["src/coocnet/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
