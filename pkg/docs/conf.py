# Configuration file for the Sphinx documentation builder.
#
# For the full list of built-in configuration values, see the documentation:
# https://www.sphinx-doc.org/en/master/usage/configuration.html

# -- Project information -----------------------------------------------------
# https://www.sphinx-doc.org/en/master/usage/configuration.html#project-information


def copy_readme_to_docs():
    """
    Copies the README.md file from the root folder to the docs folder
    while adjusting image paths using a simple string replacement.
    """
    import os

    source_path = os.path.abspath("../README.md")
    destination_path = os.path.abspath("README.md")

    try:
        with open(source_path, "r", encoding="utf-8") as file:
            content = file.read()

        # github and readthedocs resolve static paths differently
        adjusted_content = content.replace("docs/_static/", "./_static/")

        with open(destination_path, "w", encoding="utf-8") as file:
            file.write(adjusted_content)

        print(f"Copied and adjusted README.md from {source_path} to {destination_path}")

    except Exception as e:
        print(f"An error occurred while copying README.md: {e}")


copy_readme_to_docs()

project = 'lgd'
copyright = '2025, Chuck Bass'
author = 'Chuck Bass'

# -- General configuration ---------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.autosummary',
    'sphinx.ext.napoleon',
    'sphinx.ext.viewcode',
    'sphinx.ext.intersphinx',
    'myst_parser',
]

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "pandas": ("https://pandas.pydata.org/pandas-docs/stable/", None),
    "sklearn": ("https://scikit-learn.org/stable/", None),
}

myst_enable_extensions = [
    "colon_fence",
]
myst_suppress_warnings = ["myst.header"]

templates_path = ['_templates']
exclude_patterns = ['_build',
                    'Thumbs.db',
                    '.DS_Store',
                    'src/lgd/cli/**',
                    'src/lgd/data/**',
                    ]

# -- Options for HTML output -------------------------------------------------

autodoc_mock_imports = ["sklearn", "scipy"]

autodoc_type_aliases = {
    "pd": "pandas",
    "np": "numpy",
}

html_theme = 'sphinx_book_theme'
html_static_path = ['_static']

source_suffix = {
    '.rst': 'restructuredtext',
    '.md': 'markdown',
}

suppress_warnings = ["epub.duplicate"]

autosummary_generate = True

nitpicky = True

# Type aliases are not resolved by sphinx.
nitpick_ignore = [('py:class', 'StrOrNone'),
                  ('py:class', 'StrOrPath'),
                  ('py:class', 'StrOrPathOrNone'),
                  ('py:class', 'IntOrNone'),
                  ('py:class', 'StrListOrNone'),
                  ('py:class', 'np.ndarray'),
                  ('py:class', 'np.random.Generator'),
                  ('py:class', 'pd.DataFrame'),
                  ]

import os
import sys

sys.path.insert(0, os.path.abspath('../src'))
