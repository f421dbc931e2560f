# relit is licensed under the Apache License, Version 2.0.
# SPDX: Apache-2.0
#
# Builds the _relit extension with the project's own CMake configuration so
# the pip package and the standalone CMake build share one source of truth.

import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        extdir = Path(self.get_ext_fullpath(ext.name)).parent.resolve()
        build_temp = Path(self.build_temp).resolve() / ext.name
        build_temp.mkdir(parents=True, exist_ok=True)
        source = Path(__file__).parent.resolve()
        subprocess.run(
            [
                "cmake",
                "-S", str(source),
                "-B", str(build_temp),
                "-DCMAKE_BUILD_TYPE=Release",
                f"-DCMAKE_LIBRARY_OUTPUT_DIRECTORY={extdir}",
                f"-DPython3_EXECUTABLE={sys.executable}",
            ],
            check=True,
        )
        subprocess.run(
            ["cmake", "--build", str(build_temp), "--target", "_relit", "--parallel"],
            check=True,
        )


setup(
    ext_modules=[CMakeExtension("_relit")],
    cmdclass={"build_ext": CMakeBuild},
)
