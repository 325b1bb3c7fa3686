"""Build script.

The Cython kernel extension is optional: when it cannot be built (no
compiler, CORRPLAN_SKIP_EXT set), the install falls back to the pure
Python kernels selected at import time in corrplan.kernels.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"warning: skipping the compiled kernels ({exc})")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: skipping {ext.name} ({exc})")


ext_modules = []
cmdclass = {}
if not os.environ.get("CORRPLAN_SKIP_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("corrplan._speedups", ["src/corrplan/_speedups.pyx"])],
            language_level="3",
        )
        cmdclass["build_ext"] = optional_build_ext
    except ImportError:
        print("warning: Cython not available; using pure Python kernels")

setup(ext_modules=ext_modules, cmdclass=cmdclass)
