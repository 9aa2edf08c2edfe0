#!/usr/bin/env python3
# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.
#
# This source code is licensed under the BSD-style license found in the
# LICENSE file in the root directory of this source tree.

# Sphinx configuration for the torchselector API reference.

import os
import sys
from importlib.metadata import version

import pytorch_sphinx_theme

sys.path.insert(0, os.path.abspath("../.."))

needs_sphinx = "1.6"

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.doctest",
    "sphinx.ext.napoleon",
    "sphinx.ext.viewcode",
    "sphinx.ext.autosectionlabel",
    "sphinxcontrib.katex",
]

master_doc = "index"

project = "pytorch/torchselector"
copyright = "2024, PyTorch Contributors"
author = "PyTorch Contributors"

version = "v" + version("torchselector")
release = "main"

language = "en"
pygments_style = "sphinx"

# Google style "Args:" sections
napoleon_google_docstring = True
napoleon_numpy_docstring = False

autodoc_member_order = "bysource"
autosectionlabel_prefix_document = True

html_theme = "pytorch_sphinx_theme"
html_theme_path = [pytorch_sphinx_theme.get_html_theme_path()]
html_theme_options = {
    "pytorch_project": "torchselector",
    "collapse_navigation": False,
    "display_version": True,
    "logo_only": True,
}

htmlhelp_basename = "torchselector-doc"

man_pages = [(master_doc, "torchselector", "torchselector Documentation", [author], 1)]
