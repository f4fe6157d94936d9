# Configuration file for the Sphinx documentation builder.
#
# This file only contains a selection of the most common options. For a full
# list see the documentation:
# https://www.sphinx-doc.org/en/master/usage/configuration.html

# -- Path setup --------------------------------------------------------------

import importlib.metadata
import os
import sys

sys.path.insert(0, os.path.abspath("../.."))
import slackbox


# -- Project information -----------------------------------------------------

project = "SlackBox"
copyright = "2024, The SlackBox developers"
author = "The SlackBox developers"

version = importlib.metadata.version("slackbox")
release = version
# -- General configuration ---------------------------------------------------

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.napoleon",
    "sphinx.ext.intersphinx",
    "sphinx.ext.doctest",
    "sphinx.ext.mathjax",
    "sphinx_autodoc_typehints",
    "sphinx_copybutton",
    "autodocsumm",
]

templates_path = ["_templates"]

html_extra_path = ["robots.txt"]
exclude_patterns = []

display_version = True
autosummary_generate = True
autosummary_imported_member = True
autodoc_default_options = {
    "autosummary": True,
    "show-inheritance": True,
    "inherited-members": True,
}

intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "scipy": ("https://docs.scipy.org/doc/scipy/", None),
}


# -- Options for HTML output -------------------------------------------------

html_theme = "pydata_sphinx_theme"
html_theme_options = {
    "navbar_start": ["navbar-logo", "project", "version"],
}
html_sidebars = {
    "**": ["search-field.html", "sidebar-nav-bs.html", "sidebar-ethical-ads.html"]
}
apidoc_module_dir = "../../slackbox"
apidoc_module_first = True
apidoc_separate_modules = True

suppress_warnings = ["epub.unknown_project_files"]

html_static_path = ["_static"]
