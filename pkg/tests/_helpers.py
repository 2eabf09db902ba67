# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Internal helper functions for unit tests.
"""

import os


def create_outdir(subdir=None):
    """Create the top level output directory and per-test subdir.

    Args:
        subdir (str): the sub directory for this test.

    Returns:
        str: full path to the test subdir if specified, else the top dir.

    """
    pwd = os.path.abspath(".")
    testdir = os.path.join(pwd, "resilkit_test_output")
    retdir = testdir
    if subdir is not None:
        retdir = os.path.join(testdir, subdir)
    os.makedirs(retdir, exist_ok=True)
    return retdir


def plots_disabled():
    """True when RESILKIT_TEST_DISABLE_PLOTS is set in the environment."""
    return "RESILKIT_TEST_DISABLE_PLOTS" in os.environ
