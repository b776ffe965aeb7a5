"""Sphinx configuration of the qcdlab documentation.
"""

import qcdlab

project = "qcdlab"
version = qcdlab.__version__
release = version

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.autosummary",
    "sphinx.ext.mathjax",
    "sphinx.ext.napoleon",
]
napoleon_numpy_docstring = True
napoleon_google_docstring = False
autosummary_generate = True
default_role = "py:obj"
exclude_patterns = ["_build"]
