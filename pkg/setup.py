from setuptools import setup
from setuptools import find_packages

with open('README.md') as f:
    LONG_DESCRIPTION = f.read()

MAJOR_VERSION = '0'
MINOR_VERSION = '1'
MICRO_VERSION = '0'
VERSION = "{}.{}.{}".format(MAJOR_VERSION, MINOR_VERSION, MICRO_VERSION)

setup(
    name='cslstm',
    version=VERSION,
    description='Univariate time-series anomaly detection with seasonal and contextual LSTMs',
    long_description=LONG_DESCRIPTION,
    long_description_content_type='text/markdown',
    license='MIT',
    python_requires='>=3.7',
    extras_require={
        "test": [
            "pytest",
            "pytest-xdist",
            "pytest-cov",
            "coveralls",
        ]
    },
    install_requires=[
        "numpy>=1.17",
        "pandas>=1.5",
        "PyWavelets>=1.1",
        "scipy>=1.4",
        "scikit-learn>=0.24",
    ],
    keywords='time series anomaly detection lstm wavelet fourier',
    entry_points={'console_scripts': ['cslstm = cslstm.__main__:main']},
    classifiers=[
        'Environment :: Console',
        'Intended Audience :: Developers',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3.7',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
        'Topic :: Scientific/Engineering :: Information Analysis',
        'Topic :: System :: Monitoring',
        'Topic :: Utilities',
    ],
    packages=find_packages(exclude=['tests', 'examples', 'examples.*']),
    zip_safe=False,
    platforms='any',
)
