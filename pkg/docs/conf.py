# -*- coding: utf-8 -*-
#
# cslstm documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

import os
import sys
sys.path.insert(0, os.path.abspath('..'))

from cslstm import __version__  # noqa: E402


# -- General configuration ------------------------------------------------

extensions = ['sphinx.ext.autodoc',
    'sphinx.ext.intersphinx',
    'sphinx.ext.viewcode']

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'cslstm'
copyright = u'2026, cslstm developers'
author = u'cslstm developers'

version = __version__
release = __version__

language = None
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']
pygments_style = 'sphinx'
todo_include_todos = False

# autodoc imports the package; keep the numeric stack optional for doc builds
autodoc_mock_imports = ['numpy', 'pandas', 'pywt', 'scipy', 'sklearn']


# -- Options for HTML output ----------------------------------------------

html_theme = 'alabaster'
html_theme_options = {
    'description': ("anomaly detection for univariate time series "
                    "with seasonal and contextual LSTMs"),
}
html_static_path = ['_static']
html_sidebars = {
    '**': [
        'about.html',
        'navigation.html',
        'relations.html',
        'searchbox.html',
    ]
}
htmlhelp_basename = 'cslstmdoc'


# -- Options for other output ---------------------------------------------

latex_documents = [
    (master_doc, 'cslstm.tex', u'cslstm Documentation',
     author, 'manual'),
]

man_pages = [
    (master_doc, 'cslstm', u'cslstm Documentation',
     [author], 1)
]

texinfo_documents = [
    (master_doc, 'cslstm', u'cslstm Documentation',
     author, 'cslstm', 'Univariate time-series anomaly detection.',
     'Miscellaneous'),
]

intersphinx_mapping = {
    "python": ('https://docs.python.org/3', None),
    "numpy": ('https://numpy.org/doc/stable', None),
}
