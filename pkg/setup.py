"""
Setup script for the selfsim lab
"""
from setuptools import setup, find_packages

setup(
    name="selfsim-lab",
    version="0.1.0",
    description="Porous medium equation lab: self-similar solutions versus a conservative solver",
    packages=find_packages(include=["selfsim*"], exclude=["selfsim.tests*"]),
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.10",
        "pydantic>=2.5.0",
        "click>=8.1",
    ],
    extras_require={
        "dev": [
            "pytest>=7.4.3",
            "hypothesis>=6.92.1",
        ]
    },
    python_requires=">=3.9",
    entry_points={
        "console_scripts": [
            "selfsim=selfsim.cli:main",
        ],
    },
)
