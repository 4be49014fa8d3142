from setuptools import setup, find_packages
import re

# Read version from TermNMT/__init__.py
with open("TermNMT/__init__.py", "r", encoding="utf-8") as f:
    content = f.read()
    match = re.search(r'__version__\s*=\s*["\']([^"\']+)["\']', content)
    version = match.group(1) if match else "0.0.1"

with open("requirements.txt", "r") as f:
    requirements = [
        line.strip() for line in f if line.strip() and not line.startswith("#")
    ]

with open("README.md", "r", encoding="utf-8") as f:
    long_description = f.read()

setup(
    name="TermNMT",
    version=version,
    description="Terminology-aware NMT with technical term tokens, phrase-table term translation and n-best reranking",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["examples", "examples.*"]),
    install_requires=requirements,
    entry_points={
        "console_scripts": [
            "termnmt=TermNMT.term_nmt_app:main",
        ],
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
        "Topic :: Text Processing :: Linguistic",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
    ],
    python_requires=">=3.10",
)
