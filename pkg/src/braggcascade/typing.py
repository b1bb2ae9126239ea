from __future__ import annotations
from numpy.typing import NDArray, ArrayLike
from typing import TypeAlias, Union

Wavelength: TypeAlias = Union[float, NDArray]
"""A wavelength in nm, or an array of them."""

WavelengthGrid: TypeAlias = NDArray
"""One-dimensional, strictly increasing :class:`numpy.ndarray` of wavelengths in nm."""

WavelengthLike: TypeAlias = ArrayLike
"""Any Python type that can be coerced to `WavelengthGrid` type."""

TransferMatrix: TypeAlias = NDArray
"""Complex :class:`numpy.ndarray` of shape `(..., 2, 2)` mapping the forward and
backward amplitudes at the entry of an element to those at its exit. Leading
dimensions enumerate wavelengths."""

PowerSpectrum: TypeAlias = NDArray
"""Real :class:`numpy.ndarray` of power fractions in [0, 1], one per wavelength."""

Perturbation: TypeAlias = NDArray
"""Per-segment shift of the effective-index sum, one entry per segment."""

__all__ = [
    "NDArray",
    "ArrayLike",
    "Wavelength",
    "WavelengthGrid",
    "WavelengthLike",
    "TransferMatrix",
    "PowerSpectrum",
    "Perturbation",
]
