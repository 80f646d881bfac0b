import os
from setuptools import find_packages, setup

BASEDIR = os.path.abspath(os.path.dirname(__file__))
os.chdir(BASEDIR)  # find_packages and requirements paths are relative


def get_version():
    """ Read VERSION_* assignments between the version block markers """
    parts = {}
    with open(os.path.join(BASEDIR, 'kuramoto_workshop', 'version.py')) as f:
        for line in f:
            if '# END_VERSION_BLOCK' in line:
                break
            if line.startswith('VERSION_') and '=' in line:
                key, value = line.split('=', 1)
                parts[key.strip()] = int(value.strip())
    version = "{VERSION_MAJOR}.{VERSION_MINOR}.{VERSION_BUILD}".format(**parts)
    if parts.get('VERSION_ALPHA', 0) > 0:
        version += f"a{parts['VERSION_ALPHA']}"
    return version


def required(requirements_file):
    """ Read requirements file and remove comments and empty lines. """
    with open(os.path.join(BASEDIR, requirements_file)) as f:
        requirements = [line.strip() for line in f
                        if line.strip() and not line.startswith("#")]
    if 'KURAMOTO_LOOSE_REQUIREMENTS' in os.environ:
        print('USING LOOSE REQUIREMENTS!')
        requirements = [r.replace('==', '>=').replace('~=', '>=')
                        for r in requirements]
    return requirements


with open(os.path.join(BASEDIR, "README.md")) as f:
    long_description = f.read()

setup(
    name='kuramoto_workshop',
    version=get_version(),
    packages=find_packages(include=['kuramoto_workshop', 'kuramoto_workshop.*']),
    install_requires=required("requirements/requirements.txt"),
    extras_require={'test': required('requirements/test.txt')},
    python_requires='>=3.8',
    license='apache-2.0',
    description='gradient flow, critical points and the topology of the '
                'maximum set of the Kuramoto model',
    long_description=long_description,
    long_description_content_type="text/markdown",
    keywords='kuramoto gradient-flow morse-theory homology',
    classifiers=[
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Mathematics',
        'Programming Language :: Python :: 3',
    ],
    entry_points={
        'console_scripts': [
            'kuramoto-workshop=kuramoto_workshop.cli:_launch_script'
        ]
    }
)
