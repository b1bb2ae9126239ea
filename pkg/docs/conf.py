# Configuration file for the Sphinx documentation builder.
#
# For the full list of options see
# http://www.sphinx-doc.org/en/master/config

# autodoc imports the package from the source tree
import sys

sys.path.append("../src")
import braggcascade.version

# -- Project information -----------------------------------------------------

project = "braggcascade"
copyright = "2024, braggcascade developers"
author = "braggcascade developers"

release = braggcascade.version.number


# -- General configuration ---------------------------------------------------

extensions = [
    "numpydoc",  # Numpy documentation strings
    "sphinx.ext.autodoc",
    "sphinx.ext.mathjax",
    "sphinx.ext.doctest",
    "sphinx.ext.autosummary",
    "sphinx.ext.viewcode",
    "sphinx.ext.intersphinx",
]

exclude_patterns = ["_build", "Thumbs.db", ".DS_Store", ".ipynb_checkpoints"]

# readthedocs still looks for this name
master_doc = "index"

numpydoc_xref_param_type = True
numpydoc_show_class_members = False
numpydoc_attributes_as_param_list = False

autodoc_typehints = "none"
autodoc_type_aliases = {
    "Wavelength": "Wavelength",
    "WavelengthLike": "WavelengthLike",
    "WavelengthGrid": "WavelengthGrid",
    "TransferMatrix": "TransferMatrix",
    "PowerSpectrum": "PowerSpectrum",
    "Perturbation": "Perturbation",
}

intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
    "numpy": ("https://www.numpy.org/devdocs", None),
    "scipy": ("https://scipy.github.io/devdocs", None),
    "h5py": ("https://docs.h5py.org/en/stable", None),
}

# -- Options for HTML output -------------------------------------------------

html_theme = "pydata_sphinx_theme"
