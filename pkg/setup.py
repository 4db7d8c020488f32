from setuptools import setup, find_packages

setup(
    name='combhardy',
    version='0.1.0',
    packages=find_packages(exclude=['tests', 'tests.*']),
    install_requires=[
        'numpy>=1.22',
        'scipy>=1.8',
        'matplotlib>=3.5',
    ],
    extras_require={
        'tests': ['pytest', 'hypothesis', 'mpmath'],
    },
    entry_points={
        'console_scripts': [
            'combhardy=combhardy.cli:main',
        ],
    },
    description='Bounds, classification, grid oracle and Brownian exit times for the Hardy number of comb domains',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.11',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
)
