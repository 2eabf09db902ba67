# -*- coding: utf-8 -*-
#
# Configuration file for the Sphinx documentation builder.
#
# This file does only contain a selection of the most common options. For a
# full list see the documentation:
# http://www.sphinx-doc.org/en/master/config

# -- Path setup --------------------------------------------------------------

import os
import sys
from importlib import import_module
from sphinx.ext.autodoc.mock import _MockModule

sys.path.insert(0, os.path.abspath('..'))

# -- Project information -----------------------------------------------------

project = 'resilkit'
copyright = '2024-2026, resilkit developers'
author = 'resilkit developers'

# Read the version without importing the package, which needs numpy.
_version = {}
with open(os.path.join('..', 'resilkit', '_version.py')) as f:
    exec(f.read(), _version)
version = _version['get_versions']()['version']
release = version

# -- General configuration ---------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.intersphinx',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
    'sphinx.ext.napoleon',
    'sphinxarg.ext',
]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'
language = None
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']
pygments_style = 'sphinx'
keep_warnings = True

autoclass_content = 'class'
autodoc_default_options = {
    'member-order': 'bysource',
}

# Mock whatever is not installed on the docs builder.
autodoc_mock_imports = []
for missing in ('numpy', 'scipy', 'matplotlib', 'networkx', 'yaml', 'toml'):
    try:
        foo = import_module(missing)
    except ImportError:
        autodoc_mock_imports.append(missing)

for missing in autodoc_mock_imports:
    sys.modules[missing] = _MockModule(missing)

# -- Options for HTML output -------------------------------------------------

try:
    import sphinx_rtd_theme
    html_theme = 'sphinx_rtd_theme'
    html_theme_path = [sphinx_rtd_theme.get_html_theme_path()]
except ImportError:
    html_theme = 'alabaster'

html_static_path = []
htmlhelp_basename = 'resilkitdoc'

man_pages = [
    (master_doc, 'resilkit', 'resilkit Documentation', [author], 1)
]

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable', None),
    'networkx': ('https://networkx.org/documentation/stable', None),
}
