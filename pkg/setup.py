from setuptools import setup, find_packages
from os import path


VERSION = '0.1.0'

here = path.abspath(path.dirname(__file__))
with open(path.join(here, 'README.md'), encoding='utf-8') as f:
    long_description = f.read()


setup(
    name='finegrain-mot',
    version=VERSION,
    description='Fine-grained multi-object tracking: point-tracked association, '
                'a seeded dynamic-scene simulator and tracking metrics',
    long_description=long_description,
    long_description_content_type='text/markdown',
    packages=find_packages(exclude=["*_test.py", "test_*.py"]),
    install_requires=[
        'cached-property',
        'numpy',
        'pytest',
        'pytest-timeout',
        'pytest-xdist',
        'scipy',
        'tqdm',
    ],
    entry_points={
        'console_scripts': [
            'finegrain-mot=finegrain_mot.cli:main',
        ],
    },
    python_requires='>=3.5',
)
