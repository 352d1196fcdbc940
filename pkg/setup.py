from setuptools import setup, find_packages

setup(
    name="rls_nystrom",
    version="0.1.0",
    packages=find_packages(include=["rls_nystrom", "rls_nystrom.*"]),
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.22.0",
        "scipy>=1.8.0",
        "scikit-learn>=1.2",
        "pydantic>=2.0.0",
        "pydantic-settings>=2.0.0",
        "python-dotenv>=0.15.0",
        "PyYAML>=6.0",
        "psutil>=5.9.0",
        "tqdm>=4.64.0",
    ],
    entry_points={
        "console_scripts": [
            "rls-nystrom=rls_nystrom.main:main",
        ],
    },
)
