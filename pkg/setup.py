import setuptools

from oran_fault_cli.version import version

with open("README.md", "r") as fh:
    long_description = fh.read()


setuptools.setup(
    name="oran-fault-cli",
    version=version,
    description="Simulated O-RAN telemetry and ahead of time fault prediction",
    long_description=long_description,
    long_description_content_type="text/markdown",
    license="MIT",
    test_suite="tests",
    install_requires=[
        "art>=6",
        "colorama>=0.4",
        "numpy>=1.23",
        "packaging>=23.1",
        "pandas>=1.5",
        "prompt_toolkit>=3",
        "scipy>=1.9",
        "tabulate>=0.8",
    ],
    packages=setuptools.find_packages(exclude=["tests", "tests.*"]),
    entry_points={
        "console_scripts": [
            "oran-fault-cli=oran_fault_cli.main:main",
        ],
    },
    classifiers=[
        "Programming Language :: Python",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.9",
)
