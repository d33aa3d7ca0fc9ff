from setuptools import setup, find_packages

setup(
    name='quadcert',
    version='0.1.0',
    packages=find_packages(include=['quadcert', 'quadcert.*']),
    package_data={'quadcert': ['data/*.json', 'data/*.nnet']},
    entry_points={
        'console_scripts': [
            'quadcert = quadcert.cli:main',
        ],
    },
    install_requires=[
        'numpy',
        'scipy',
        'cvxpy>=1.4',
        'mpmath',
    ],
    extras_require={
        'progress': ['alive-progress'],
        'dev': ['pytest>=6.0'],
    },
    python_requires='>=3.8',
    author='Alberto Carta',
    author_email='your.email@example.com',
    description='Verified quadratic constraints for scalar relations and QC-based reachability of neural networks',
    long_description=open('README.md').read(),
    long_description_content_type='text/markdown',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Operating System :: POSIX :: Linux',
        'Operating System :: MacOS :: MacOS X',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
)
