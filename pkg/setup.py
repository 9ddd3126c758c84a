"""Build script: compiles the optional accelerator extension.

The package is pure Python plus one optional compiled kernel for the hot
expectation sums.  If Cython is available the .pyx source is cythonized;
otherwise a checked-in generated C file is compiled; if neither works the
install proceeds without the extension and the numpy fallback is used.
"""

import os
from setuptools import setup, Extension
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Never fail the install because the accelerator would not compile."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001 - any build failure is non-fatal
            print(f"warning: skipping compiled kernel ({exc}); "
                  "the pure-Python kernel will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: skipping {ext.name} ({exc}); "
                  "the pure-Python kernel will be used")


def make_extensions():
    if os.environ.get("SUBMAX_NO_EXT"):
        return []
    pyx = os.path.join("src", "submax", "_kernel.pyx")
    c = os.path.join("src", "submax", "_kernel.c")
    try:
        from Cython.Build import cythonize
        return cythonize(
            [Extension("submax._kernel", [pyx])],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        if os.path.exists(c):
            return [Extension("submax._kernel", [c])]
        return []


setup(
    ext_modules=make_extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
