from __future__ import annotations
import dataclasses
from typing import Union
import numpy as np
from scipy.optimize import bisect  # type: ignore
from ..typing import NDArray
from ..tools import InvalidInput, NoGuidedMode, make_logger

N_SILICON = 3.476
N_OXIDE = 1.444
N_AIR = 1.0

SCAN_POINTS = 2000
"""Number of intervals in the bracketing scan of the dispersion relation."""

ROOT_TOLERANCE = 1e-13
"""Absolute tolerance of the bisection on the effective index."""


@dataclasses.dataclass(frozen=True)
class WaveguideGeometry:
    """Cross-section of a rectangular strip waveguide.

    Parameters
    ----------
    core_thickness : float, default = 220.0
        Thickness of the guiding layer (nm).
    core_width : float, default = 1150.0
        Width of the strip (nm).
    n_core : float, default = N_SILICON
        Refractive index of the core.
    n_top : float, default = N_AIR
        Index of the top cladding.
    n_bottom : float, default = N_OXIDE
        Index of the buried oxide.
    n_side : float, default = N_AIR
        Index of the material at both sides of the strip.
    """

    core_thickness: float = 220.0
    core_width: float = 1150.0
    n_core: float = N_SILICON
    n_top: float = N_AIR
    n_bottom: float = N_OXIDE
    n_side: float = N_AIR

    def __post_init__(self):
        if not self.core_thickness > 0:
            raise InvalidInput(f"core_thickness must be positive: {self.core_thickness}")
        if not self.core_width > 0:
            raise InvalidInput(f"core_width must be positive: {self.core_width}")
        if min(self.n_top, self.n_bottom, self.n_side) <= 0:
            raise InvalidInput("Cladding indices must be positive")
        if not self.n_core > max(self.n_top, self.n_bottom, self.n_side):
            raise InvalidInput(
                f"n_core={self.n_core} does not exceed the cladding indices"
            )

    @property
    def cladding_index(self) -> float:
        """Largest cladding index, below which modes radiate."""
        return max(self.n_top, self.n_bottom, self.n_side)

    def replace(self, **kwdargs) -> WaveguideGeometry:
        return dataclasses.replace(self, **kwdargs)

    def with_width(self, width: float) -> WaveguideGeometry:
        return dataclasses.replace(self, core_width=width)


@dataclasses.dataclass(frozen=True)
class ModeSolution:
    """Guided mode found by the slab or effective-index solvers.

    Parameters
    ----------
    n_eff : float
        Effective index of the mode.
    mode_order : int
        Number of nodes of the transverse field.
    wavelength : float
        Vacuum wavelength (nm).
    polarization : str, default = "TE"
        Only quasi-TE modes are computed.
    """

    n_eff: float
    mode_order: int
    wavelength: float
    polarization: str = "TE"


def dispersion_residual(
    n_eff: Union[float, NDArray],
    n_core: float,
    n_clad_a: float,
    n_clad_b: float,
    thickness: float,
    wavelength: float,
    mode_order: int,
    tm: bool = False,
) -> Union[float, NDArray]:
    """Transverse phase mismatch of a three-layer slab mode.

    Returns ``kx d - atan(ρa γa / kx) - atan(ρb γb / kx) - m π``, where
    ``ρ = 1`` for TE and ``ρ = (n_core/n_clad)²`` for TM. The residual vanishes
    on guided modes and is strictly decreasing in `n_eff` on
    ``[max(n_clad_a, n_clad_b), n_core]``.
    """
    n = np.asarray(n_eff, dtype=np.float64)
    k0 = 2 * np.pi / wavelength
    kx = k0 * np.sqrt(np.maximum(n_core**2 - n**2, 0.0))
    ga = k0 * np.sqrt(np.maximum(n**2 - n_clad_a**2, 0.0))
    gb = k0 * np.sqrt(np.maximum(n**2 - n_clad_b**2, 0.0))
    if tm:
        ga = ga * (n_core / n_clad_a) ** 2
        gb = gb * (n_core / n_clad_b) ** 2
    output = (
        kx * thickness - np.arctan2(ga, kx) - np.arctan2(gb, kx) - mode_order * np.pi
    )
    return float(output) if output.ndim == 0 else output


def _solve_slab(
    n_core: float,
    n_clad_a: float,
    n_clad_b: float,
    thickness: float,
    wavelength: float,
    mode_order: int,
    tm: bool = False,
    n_floor: float | None = None,
) -> float:
    n_low = max(n_clad_a, n_clad_b) if n_floor is None else n_floor
    if n_low >= n_core:
        raise NoGuidedMode(f"Core index {n_core} below cutoff index {n_low}")

    def residual(n):
        return dispersion_residual(
            n, n_core, n_clad_a, n_clad_b, thickness, wavelength, mode_order, tm
        )

    n = np.linspace(n_low, n_core, SCAN_POINTS + 1)
    f = residual(n)
    if not f[0] > 0:
        raise NoGuidedMode(
            f"No mode of order {mode_order} at λ={wavelength} nm "
            f"(thickness {thickness} nm, n_core={n_core:.6f})"
        )
    (changes,) = np.nonzero((f[:-1] > 0) & (f[1:] <= 0))
    i = changes[0]
    if f[i + 1] == 0:
        return float(n[i + 1])
    return float(bisect(residual, n[i], n[i + 1], xtol=ROOT_TOLERANCE))


def solve_slab_te(
    n_core: float,
    n_clad_a: float,
    n_clad_b: float,
    thickness: float,
    wavelength: float,
    mode_order: int = 0,
) -> ModeSolution:
    """Effective index of the TE mode of an asymmetric slab.

    The root is bracketed by scanning the dispersion relation at
    :data:`SCAN_POINTS` uniform intervals between the largest cladding index
    and `n_core`, and refined by bisection.

    Parameters
    ----------
    n_core : float
        Index of the guiding layer.
    n_clad_a, n_clad_b : float
        Indices of the claddings at both sides of the slab.
    thickness : float
        Slab thickness (nm).
    wavelength : float
        Vacuum wavelength (nm).
    mode_order : int, default = 0
        Order of the TE mode.

    Returns
    -------
    ModeSolution
        The guided mode.

    Raises
    ------
    NoGuidedMode
        If the mode is below cutoff.
    InvalidInput
        If the slab parameters are not physical.
    """
    if not thickness > 0:
        raise InvalidInput(f"Slab thickness must be positive: {thickness}")
    if not wavelength > 0:
        raise InvalidInput(f"Wavelength must be positive: {wavelength}")
    if not n_core > max(n_clad_a, n_clad_b):
        raise InvalidInput(f"n_core={n_core} does not exceed cladding indices")
    if int(mode_order) != mode_order or mode_order < 0:
        raise InvalidInput(f"Invalid mode order {mode_order}")
    n_eff = _solve_slab(
        n_core, n_clad_a, n_clad_b, thickness, wavelength, int(mode_order)
    )
    return ModeSolution(n_eff, int(mode_order), wavelength)


def effective_index_2d(
    geometry: WaveguideGeometry, wavelength: float, mode_order: int = 0
) -> ModeSolution:
    """Effective index of a quasi-TE strip mode by the effective-index method.

    The vertical step solves the TE slab made of the core layer between the
    top and bottom claddings. The lateral step solves a slab of width
    `core_width`, with the vertical effective index as core and `n_side` as
    cladding. The dominant electric field of a quasi-TE mode is normal to the
    lateral walls, so the lateral step uses the TM slab relation.

    A mode whose effective index does not exceed every cladding index leaks
    into the substrate and is reported as not guided.

    Parameters
    ----------
    geometry : WaveguideGeometry
        Waveguide cross-section.
    wavelength : float
        Vacuum wavelength (nm).
    mode_order : int, default = 0
        Lateral mode order, 0 or 1.

    Returns
    -------
    ModeSolution
        Guided quasi-TE mode.
    """
    if mode_order not in (0, 1):
        raise InvalidInput(f"Only lateral orders 0 and 1 are supported: {mode_order}")
    if not wavelength > 0:
        raise InvalidInput(f"Wavelength must be positive: {wavelength}")
    vertical = solve_slab_te(
        geometry.n_core,
        geometry.n_top,
        geometry.n_bottom,
        geometry.core_thickness,
        wavelength,
        0,
    )
    n_eff = _solve_slab(
        vertical.n_eff,
        geometry.n_side,
        geometry.n_side,
        geometry.core_width,
        wavelength,
        mode_order,
        tm=True,
        n_floor=geometry.cladding_index,
    )
    return ModeSolution(n_eff, mode_order, wavelength)


def group_index(
    source, wavelength: float, mode_order: int = 0, step: float = 0.1
) -> float:
    """Group index ``n_g = n_eff - λ dn_eff/dλ`` by central differences.

    Parameters
    ----------
    source : WaveguideGeometry | DispersionModel
        Either a cross-section, solved with :func:`effective_index_2d`, or any
        dispersion model.
    wavelength : float
        Vacuum wavelength (nm).
    mode_order : int, default = 0
        Mode order.
    step : float, default = 0.1
        Finite-difference step (nm).
    """
    if isinstance(source, WaveguideGeometry):
        geometry = source

        def n_eff(x: float) -> float:
            return effective_index_2d(geometry, x, mode_order).n_eff

    else:
        model = source

        def n_eff(x: float) -> float:
            return float(model.n_eff(x, mode_order))

    n0 = n_eff(wavelength)
    derivative = (n_eff(wavelength + step) - n_eff(wavelength - step)) / (2 * step)
    return n0 - wavelength * derivative


def dneff_dwidth(
    geometry: WaveguideGeometry,
    wavelength: float,
    mode_order: int = 0,
    step: float = 1.0,
) -> float:
    """Sensitivity of the effective index to the strip width (1/nm).

    Central difference with width step `step` (nm).
    """
    width = geometry.core_width
    if not width > step:
        raise InvalidInput(f"Width {width} nm too small for step {step} nm")
    with make_logger(2) as logger:
        upper = effective_index_2d(geometry.with_width(width + step), wavelength, mode_order)
        lower = effective_index_2d(geometry.with_width(width - step), wavelength, mode_order)
        logger(
            f"dneff_dwidth: W={width} nm, TE{mode_order}, "
            f"n+={upper.n_eff:.10f}, n-={lower.n_eff:.10f}"
        )
    return (upper.n_eff - lower.n_eff) / (2 * step)
