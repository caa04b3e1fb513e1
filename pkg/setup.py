"""Setup configuration for schemaudit package."""

import re

import setuptools

with open("readme.md", "r") as fh:
    long_description = fh.read()

# Read the version without importing the package and its numeric stack
with open("schemaudit/utils/constants.py", "r") as fh:
    VERSION = re.search(r"^VERSION = '([^']+)'", fh.read(), re.M).group(1)

setuptools.setup(
    name="schemaudit",
    version=VERSION,
    description="Audit annotation schemas for stability, separability and robustness from multi-annotator judgments",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_namespace_packages(include=["schemaudit", "schemaudit.*"]),
    package_data={
        "schemaudit": ["data/*.json", "data/*.yml", "data/prompts/*.yml"],
    },
    install_requires=[
        "PyYAML>=5.3.1",
        "numpy>=1.22",
        "pandas>=1.5",
        "statsmodels>=0.13",
    ],
    extras_require={
        "test": [
            "pytest>=7.0",
            "hypothesis>=6.0",
        ],
    },
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Information Analysis",
    ],
    python_requires='>=3.10',
    license="MIT",
    entry_points={
        "console_scripts": [
            "audit=schemaudit.audit:main"
        ]
    }
)
