from . import (
    test_tools,
    test_modes,
    test_cmt,
    test_tmm,
    test_fabnoise,
    test_spectra,
    test_design,
    test_hdf5,
    test_cli,
)

__all__ = [
    "test_tools",
    "test_modes",
    "test_cmt",
    "test_tmm",
    "test_fabnoise",
    "test_spectra",
    "test_design",
    "test_hdf5",
    "test_cli",
]
