import glob
import os

from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup

eigen_candidates = ["/usr/include/eigen3", "/usr/local/include/eigen3"]
eigen_include = next((p for p in eigen_candidates if os.path.isdir(p)), None)
include_dirs = ["include", "vendor"]
if eigen_include:
    include_dirs.append(eigen_include)

ext = Pybind11Extension(
    "_specklepair",
    sources=sorted(glob.glob("src/*.cpp")) + ["bindings/module.cpp"],
    include_dirs=include_dirs,
    libraries=["fftw3"],
    cxx_std=20,
)

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})
