import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "groupsched.kernels._core",
        ["src/groupsched/kernels/_core.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
]

# The compiled core is optional: without Cython the package installs with the
# numpy fallback kernels only (selected at import in groupsched.kernels).
setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": 3})
    if cythonize is not None
    else [],
)
