"""Builds the Rust extension with cargo; no rust-specific build backend is
assumed, so `pip install -e . --no-build-isolation` works from a plain
setuptools environment."""

import shutil
import subprocess
from pathlib import Path

from setuptools import setup
from setuptools.command.build_ext import build_ext
from setuptools.extension import Extension


class CargoExtension(Extension):
    def __init__(self):
        super().__init__("fairslice._fairslice", sources=[])


class CargoBuildExt(build_ext):
    def build_extension(self, ext):
        workspace = Path(__file__).resolve().parent.parent
        subprocess.run(
            ["cargo", "build", "--release", "-p", "fairslice-python"],
            cwd=workspace,
            check=True,
        )
        built = workspace / "target" / "release" / "lib_fairslice.so"
        dest = Path(self.get_ext_fullpath(ext.name))
        dest.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(built, dest)


setup(ext_modules=[CargoExtension()], cmdclass={"build_ext": CargoBuildExt})
