"""Build script: compiles the optional Cython kernel.

If Cython or a C compiler is unavailable the build falls back to the
pure-Python kernel; the package stays fully functional, only slower.
"""

import os

from setuptools import setup
from setuptools.command.build_ext import build_ext


def make_extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        return []
    extensions = [
        Extension(
            "popergm.kernels._speed",
            ["src/popergm/kernels/_speed.pyx"],
            include_dirs=[np.get_include()],
            # -ffp-contract=off keeps float expressions bit-identical to
            # the pure-Python kernel (no FMA contraction).
            extra_compile_args=["-O3", "-ffp-contract=off"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
    ]
    return cythonize(
        extensions,
        compiler_directives={"language_level": 3, "embedsignature": True},
    )


class OptionalBuildExt(build_ext):
    """Skip the extension (with a warning) when it cannot be built."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            if os.environ.get("POPERGM_REQUIRE_EXTENSION"):
                raise
            print(f"warning: building the compiled kernel failed ({exc}); "
                  "falling back to the pure-Python kernel")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            if os.environ.get("POPERGM_REQUIRE_EXTENSION"):
                raise
            print(f"warning: building {ext.name} failed ({exc}); "
                  "falling back to the pure-Python kernel")


setup(
    ext_modules=make_extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
