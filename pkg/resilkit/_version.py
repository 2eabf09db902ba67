# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Static version information.
"""

_version = "0.4.0"


def get_versions():
    """Return the version dictionary used by the package and setup.py.
    """
    return {
        "version": _version,
        "full-revisionid": None,
        "dirty": False,
        "error": None,
        "date": None,
    }
