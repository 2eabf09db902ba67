#!/usr/bin/env python3

import os
import sys
import unittest

from setuptools import find_packages, setup
from setuptools.command.test import test as TestCommand


def get_version():
    # Read the version without importing the package and its dependencies.
    ver = dict()
    path = os.path.join(os.path.dirname(os.path.abspath(__file__)),
                        "resilkit", "_version.py")
    with open(path, "r") as f:
        exec(f.read(), ver)
    return ver["get_versions"]()["version"]


# The setup options
setup_opts = dict()

# Entry points / scripts.  Add scripts here and define the main() of each
# script in resilkit.scripts.<foo>.main()
setup_opts["entry_points"] = {
    "console_scripts": [
        "resilkit = resilkit.scripts.resil:main",
    ]
}

setup_opts["name"] = "resilkit"
setup_opts["provides"] = "resilkit"
setup_opts["version"] = get_version()
setup_opts["description"] = "Cyber-resilience engineering toolkit for " \
    "next-generation networks"
setup_opts["author"] = "resilkit developers"
setup_opts["packages"] = find_packages(where=".", exclude=["tests"])
setup_opts["license"] = "MIT"
setup_opts["requires"] = ["Python (>3.7.0)", ]
setup_opts["include_package_data"] = True
setup_opts["package_data"] = {
    "resilkit": ["data/examples/*.json"],
}
setup_opts["install_requires"] = [
    'numpy',
    'scipy',
    'matplotlib',
    'PyYAML',
    'toml',
    'networkx',
]

# Command Class dictionary.
cmdcls = dict()

# Class to run unit tests

class ResilTestCommand(TestCommand):

    def __init__(self, *args, **kwargs):
        super(ResilTestCommand, self).__init__(*args, **kwargs)

    def initialize_options(self):
        TestCommand.initialize_options(self)

    def finalize_options(self):
        TestCommand.finalize_options(self)
        self.test_suite = True

    def run(self):
        loader = unittest.TestLoader()
        runner = unittest.TextTestRunner(verbosity=2)
        suite = loader.discover("tests", pattern="test_*.py",
                                top_level_dir=".")
        ret = 0
        local_ret = runner.run(suite)
        if not local_ret.wasSuccessful():
            ret = 1
        sys.exit(ret)

# Add our custom test runner
cmdcls["test"] = ResilTestCommand

# Add command class to setup options
setup_opts["cmdclass"] = cmdcls

# Do the setup.
setup(**setup_opts)
