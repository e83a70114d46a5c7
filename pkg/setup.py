from setuptools import find_packages, setup

setup(
    name="dsinfluence",
    version="1.0",
    packages=find_packages(exclude=["examples", "examples.*"]),
    python_requires=">=3.8",
    install_requires=[
        "pony >= 0.7.16",
        "typer >= 0.9",
        "loguru >= 0.5",
        "tabulate >= 0.8",
        "numpy >= 1.20",
        "scipy >= 1.6",
        "requests >= 2.25",
        "tenacity >= 8.0",
        "matplotlib >= 3.4",
    ],
    package_data={"dsinfluence": ["unittests/fixtures/*"]},
    entry_points={"console_scripts": ["dsinfluence-cli=dsinfluence.cli:main"]},
)
