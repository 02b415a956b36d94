"""Setup file for yardsat, the yard timetable saturation toolkit

"""

from setuptools import setup, find_packages
from codecs import open
from os import path

here = path.abspath(path.dirname(__file__))

with open(path.join(here, 'README.md'), encoding='utf-8') as f:
    long_description = f.read()

setup(
    name='yardsat',
    version='1.0',
    description='Exact saturation of periodic timetables for rail-road transshipment yards',
    long_description=long_description,
    long_description_content_type="text/markdown",
    author='Tobias Wood',
    author_email='tobias@spinicist.org.uk',
    install_requires=['numpy>=1.14.2',
                      'scipy>=1.9.0',
                      'pandas>=1.5',
                      'networkx>=2.6',
                      'pyyaml>=5.1'],
    extras_require={'test': ['pytest>=6'],
                    'mps': ['pulp>=2.7']},
    python_requires='>=3.8',
    license='MPL',
    classifiers=['Topic :: Scientific/Engineering :: Mathematics',
                 'Programming Language :: Python :: 3',
                 ],
    keywords='railway yard scheduling timetable saturation',
    packages=find_packages(exclude=['tests']),
    package_data={'yardsat': ['data/*.yaml']},
    entry_points={
        'console_scripts': [
            'yardsat=yardsat.runner:main',
        ],
    },
)
