# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Test suite for the resilkit toolkit.

This directory contains the unittest suite.

"""
