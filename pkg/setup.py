from setuptools import setup


def readme():
    with open("README.md") as f:
        return f.read()


def version():
    exec(open("ajdn/version.py").read())
    return locals()["__version__"]


tests_require = [
    "pytest",
    "pytest-cov",
    "pytest-httpserver",
]

types_require = ["mypy", "types-requests"]

dev_require = (
    tests_require
    + types_require
    + [
        "black",
    ]
)

docs_require = ["sphinx", "sphinx_rtd_theme"]

setup(
    name="ajdn",
    author="ajdn contributors",
    packages=["ajdn"],
    python_requires=">=3.11",
    # urllib is used directly for retries
    install_requires=[
        "numpy >= 1.24",
        "scipy >= 1.10",
        "joblib >= 1.2",
        "requests >= 2.28",
        "urllib3 >= 1.26",
    ],
    tests_require=tests_require,
    extras_require={
        "test": tests_require,
        "types": types_require,
        "dev": dev_require,
        "docs": docs_require,
    },
    entry_points={"console_scripts": ["ajdn = ajdn.cli:main"]},
    license="MIT",
    description="asynchronous jump detection for high-dimensional time series",
    long_description=readme(),
    long_description_content_type="text/markdown",
    version=version(),
)
