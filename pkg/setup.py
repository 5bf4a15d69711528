"""Build script for the optional compiled rendering kernel.

The package is fully functional without the extension (a NumPy fallback is
selected at import time), so compilation failures are demoted to warnings.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the Cython kernel if possible; never fail the install."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - toolchain dependent
            warnings.warn(f"skipping compiled render kernel: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover - toolchain dependent
            warnings.warn(f"skipping {ext.name}: {exc}")


def extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:  # pragma: no cover
        return []
    return cythonize(
        [
            Extension(
                "mzi_align._render_cy",
                ["src/mzi_align/_render_cy.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "language_level": "3",
        },
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
