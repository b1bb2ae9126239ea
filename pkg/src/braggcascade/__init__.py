from . import version, tools, modes, cmt, tmm, fabnoise, spectra, design, hdf5
from .modes import (
    WaveguideGeometry,
    ConstantDispersion,
    TableDispersion,
    GeometryDispersion,
)
from .cmt import GratingSpec
from .tmm import CascadeSpec, cascade_spectrum
from .fabnoise import NoiseModel, EnsembleStats, monte_carlo
from .spectra import Spectrum, MeasurementChain
from .design import DesignTarget, CascadeDesign

__all__ = [
    "version",
    "tools",
    "modes",
    "cmt",
    "tmm",
    "fabnoise",
    "spectra",
    "design",
    "hdf5",
    "WaveguideGeometry",
    "ConstantDispersion",
    "TableDispersion",
    "GeometryDispersion",
    "GratingSpec",
    "CascadeSpec",
    "cascade_spectrum",
    "NoiseModel",
    "EnsembleStats",
    "monte_carlo",
    "Spectrum",
    "MeasurementChain",
    "DesignTarget",
    "CascadeDesign",
]
