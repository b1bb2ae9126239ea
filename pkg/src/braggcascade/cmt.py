from __future__ import annotations
import dataclasses
import math
from typing import Optional, Union
import numpy as np
from scipy.optimize import brentq  # type: ignore
from .typing import NDArray, Wavelength, WavelengthLike
from .tools import (
    BandwidthBelowLengthLimit,
    InvalidInput,
    NoResonanceInWindow,
    make_logger,
)
from .modes import DispersionModel, WaveguideGeometry, effective_index_2d, group_index
from .spectra import Spectrum

MODE_PAIRS: dict[str, tuple[int, int]] = {"fundamental": (0, 0), "hybrid": (0, 1)}
"""Mode orders of the forward and backward waves coupled by each grating type."""

DEFAULT_WINDOW = (1200.0, 1700.0)
"""Search window of the phase-matching condition (nm)."""

SERIES_THRESHOLD = 1e-4


@dataclasses.dataclass(frozen=True)
class GratingSpec:
    """Uniform sidewall-corrugated Bragg grating section.

    Parameters
    ----------
    period : float, default = 290.0
        Grating period Λ (nm).
    duty_cycle : float, default = 0.5
        Fraction of the period occupied by the teeth.
    length : float, default = 250000.0
        Grating length (nm).
    kappa : float, default = 1e-4
        Coupling coefficient (1/nm).
    bragg_order : int, default = 1
        Diffraction order of the phase-matching condition.
    mode_pair : str, default = "hybrid"
        ``"fundamental"`` for TE0 to TE0 reflection and ``"hybrid"`` for
        TE0 to TE1.
    avg_width : float, default = 1150.0
        Average waveguide width along the grating (nm).
    corrugation : float, default = 50.0
        Peak-to-peak width modulation (nm).
    segment_periods : int, default = 1
        Number of periods lumped into each transfer-matrix segment.
    """

    period: float = 290.0
    duty_cycle: float = 0.5
    length: float = 250_000.0
    kappa: float = 1e-4
    bragg_order: int = 1
    mode_pair: str = "hybrid"
    avg_width: float = 1150.0
    corrugation: float = 50.0
    segment_periods: int = 1

    def __post_init__(self):
        if not self.period > 0:
            raise InvalidInput(f"period must be positive: {self.period}")
        if not 0 < self.duty_cycle < 1:
            raise InvalidInput(f"duty_cycle must lie in (0, 1): {self.duty_cycle}")
        if not self.length >= self.period:
            raise InvalidInput(
                f"length {self.length} nm is shorter than one period {self.period} nm"
            )
        if not self.kappa >= 0:
            raise InvalidInput(f"kappa must be non-negative: {self.kappa}")
        if int(self.bragg_order) != self.bragg_order or self.bragg_order < 1:
            raise InvalidInput(f"bragg_order must be a positive integer: {self.bragg_order}")
        if self.mode_pair not in MODE_PAIRS:
            raise InvalidInput(
                f"mode_pair must be one of {list(MODE_PAIRS)}: {self.mode_pair!r}"
            )
        if not self.avg_width > 0:
            raise InvalidInput(f"avg_width must be positive: {self.avg_width}")
        if not 0 <= self.corrugation < self.avg_width:
            raise InvalidInput(f"corrugation out of range: {self.corrugation}")
        if int(self.segment_periods) != self.segment_periods or self.segment_periods < 1:
            raise InvalidInput(
                f"segment_periods must be a positive integer: {self.segment_periods}"
            )

    @property
    def teeth_length(self) -> float:
        return self.duty_cycle * self.period

    @property
    def gap_length(self) -> float:
        return (1 - self.duty_cycle) * self.period

    @property
    def modes(self) -> tuple[int, int]:
        return MODE_PAIRS[self.mode_pair]

    @property
    def period_count(self) -> int:
        """Number of whole periods that fit in the grating."""
        return max(1, round(self.length / self.period))

    @property
    def segment_count(self) -> int:
        return math.ceil(self.period_count / self.segment_periods)

    @property
    def segment_length(self) -> float:
        """Length of each transfer-matrix segment; all segments are equal."""
        return self.length / self.segment_count

    def replace(self, **kwdargs) -> GratingSpec:
        return dataclasses.replace(self, **kwdargs)


@dataclasses.dataclass(frozen=True)
class BraggSolution:
    """Root of the phase-matching condition.

    Parameters
    ----------
    lambda0 : float
        Resonance wavelength (nm).
    n1, n2 : float
        Effective indices of the forward and backward modes at `lambda0`.
    residual : float
        Value of the phase-matching residual at `lambda0` (nm).
    window : tuple[float, float]
        Wavelength interval that was searched.
    """

    lambda0: float
    n1: float
    n2: float
    residual: float
    window: tuple[float, float]


def _phase_matching_residual(
    wavelength: Wavelength, spec: GratingSpec, dispersion: DispersionModel
) -> Wavelength:
    return (
        wavelength
        - spec.period * dispersion.index_sum(wavelength, spec.modes) / spec.bragg_order
    )


def bragg_wavelength(
    spec: GratingSpec,
    dispersion: DispersionModel,
    window: tuple[float, float] = DEFAULT_WINDOW,
    samples: int = 101,
) -> BraggSolution:
    """Solve the phase-matching condition ``λ = Λ (n1(λ) + n2(λ)) / p``.

    For the fundamental pair ``n1 = n2`` and the condition reduces to
    ``λ = 2 Λ n_eff(λ) / p``. The residual is sampled at `samples` points of
    the window intersected with the dispersion domain, and the first sign
    change is refined with Brent's method.

    Parameters
    ----------
    spec : GratingSpec
        Grating section.
    dispersion : DispersionModel
        Effective indices of the modes of the pair.
    window : tuple[float, float], default = (1200, 1700)
        Search interval (nm).
    samples : int, default = 101
        Number of points of the bracketing scan.

    Returns
    -------
    BraggSolution
        Resonance wavelength and effective indices.

    Raises
    ------
    NoResonanceInWindow
        If the residual does not change sign in the window.
    """
    lo = max(window[0], dispersion.window[0])
    hi = min(window[1], dispersion.window[1])
    if not lo < hi:
        raise NoResonanceInWindow(
            f"Search window {window} outside the dispersion domain {dispersion.window}"
        )
    x = np.linspace(lo, hi, samples)
    f = np.asarray(_phase_matching_residual(x, spec, dispersion))
    (zeros,) = np.nonzero(f == 0)
    (changes,) = np.nonzero(f[:-1] * f[1:] < 0)
    if zeros.size:
        root = float(x[zeros[0]])
    elif changes.size:
        i = changes[0]
        root = float(
            brentq(
                lambda w: float(_phase_matching_residual(w, spec, dispersion)),
                x[i],
                x[i + 1],
                xtol=1e-12,
            )
        )
    else:
        raise NoResonanceInWindow(
            f"Phase-matching residual has no sign change in [{lo}, {hi}] nm"
        )
    n1, n2 = (float(dispersion.n_eff(root, m)) for m in spec.modes)
    residual = float(_phase_matching_residual(root, spec, dispersion))
    with make_logger(2) as logger:
        logger(f"bragg_wavelength: λ0={root:.9f} nm, n1={n1:.8f}, n2={n2:.8f}")
    return BraggSolution(root, n1, n2, residual, (lo, hi))


def detuning(
    wavelength: Wavelength, spec: GratingSpec, dispersion: DispersionModel
) -> Wavelength:
    """Coupled-mode detuning ``δ = π (n1 + n2) / λ - π p / Λ`` (1/nm)."""
    x = np.asarray(wavelength, dtype=np.float64)
    delta = (
        np.pi * np.asarray(dispersion.index_sum(x, spec.modes)) / x
        - np.pi * spec.bragg_order / spec.period
    )
    return float(delta) if delta.ndim == 0 else delta


def peak_rejection_db(kappa: float, length: float) -> float:
    """Rejection at resonance, ``-10 log10(1 - tanh²(κL)) = 20 log10 cosh(κL)``."""
    if not kappa >= 0:
        raise InvalidInput(f"kappa must be non-negative: {kappa}")
    if not length > 0:
        raise InvalidInput(f"length must be positive: {length}")
    x = kappa * length
    return float(20 / np.log(10) * (np.logaddexp(x, -x) - np.log(2)))


def rejection_to_kappa_length(rejection_db: float) -> float:
    """Product κL giving a resonance rejection of `rejection_db`."""
    if not rejection_db >= 0:
        raise InvalidInput(f"Rejection must be non-negative: {rejection_db}")
    return float(np.arccosh(10 ** (rejection_db / 20)))


def bandwidth_nm(lambda0: float, n_g: float, kappa: float, length: float) -> float:
    """Null-to-null bandwidth ``λ0² / (π n_g) sqrt(κ² + π² / L²)`` (nm)."""
    if not (lambda0 > 0 and n_g > 0 and length > 0 and kappa >= 0):
        raise InvalidInput(
            f"Invalid bandwidth arguments λ0={lambda0}, n_g={n_g}, κ={kappa}, L={length}"
        )
    return lambda0**2 / (np.pi * n_g) * math.sqrt(kappa**2 + (np.pi / length) ** 2)


def mean_group_index(
    spec: GratingSpec, dispersion: DispersionModel, wavelength: float
) -> float:
    """Average group index of the two modes coupled by `spec`."""
    return float(np.mean([group_index(dispersion, wavelength, m) for m in spec.modes]))


def kappa_from_bandwidth(
    delta_lambda: float, lambda0: float, n_g: float, length: float
) -> float:
    """Coupling coefficient that gives the null-to-null bandwidth `delta_lambda`.

    Raises
    ------
    BandwidthBelowLengthLimit
        If `delta_lambda` is narrower than ``λ0² / (n_g L)``, the bandwidth of
        an infinitely weak grating of this length.
    """
    if not (delta_lambda > 0 and lambda0 > 0 and n_g > 0 and length > 0):
        raise InvalidInput("Bandwidth, wavelength, group index and length must be positive")
    a = delta_lambda * np.pi * n_g / lambda0**2
    b = np.pi / length
    argument = a * a - b * b
    if argument < 0:
        if argument >= -1e-12 * b * b:
            return 0.0
        raise BandwidthBelowLengthLimit(
            f"Bandwidth {delta_lambda} nm below the limit "
            f"{lambda0**2 / (n_g * length)} nm of a {length} nm grating"
        )
    return math.sqrt(argument)


def bandwidth_to_length(
    delta_lambda: float, lambda0: float, n_g: float, kappa: float
) -> float:
    """Grating length with null-to-null bandwidth `delta_lambda` at coupling `kappa`."""
    if not (delta_lambda > 0 and lambda0 > 0 and n_g > 0 and kappa >= 0):
        raise InvalidInput("Invalid arguments to bandwidth_to_length")
    a = delta_lambda * np.pi * n_g / lambda0**2
    if not a > kappa:
        raise BandwidthBelowLengthLimit(
            f"Bandwidth {delta_lambda} nm is not wider than the κ-limited "
            f"width {lambda0**2 * kappa / (np.pi * n_g)} nm"
        )
    return np.pi / math.sqrt(a * a - kappa * kappa)


def cosh_sinhc(z: Union[complex, NDArray]) -> tuple[NDArray, NDArray]:
    """Return ``cosh(z)`` and ``sinh(z)/z``, the latter by its Taylor series
    near the removable singularity at ``z = 0``."""
    z = np.asarray(z, dtype=np.complex128)
    small = np.abs(z) < SERIES_THRESHOLD
    z2 = z * z
    safe = np.where(small, 1.0, z)
    sinhc = np.where(small, 1 + z2 / 6 + z2 * z2 / 120, np.sinh(safe) / safe)
    return np.cosh(z), sinhc


def uniform_grating_response(
    spec: GratingSpec, delta: Wavelength
) -> tuple[Union[complex, NDArray], Union[complex, NDArray]]:
    """Reflection and transmission amplitudes of a uniform grating.

    With ``γ² = κ² - δ²``, ``t = γ / (γ cosh γL + i δ sinh γL)`` and
    ``r = -i κ sinh γL / (γ cosh γL + i δ sinh γL)``. Beyond the stop band
    γ is imaginary and the hyperbolic functions become trigonometric; the
    limit ``|δ| = κ`` is evaluated through a series.

    Parameters
    ----------
    spec : GratingSpec
        Grating section; only `kappa` and `length` enter.
    delta : float | NDArray
        Detuning (1/nm).

    Returns
    -------
    tuple[complex | NDArray, complex | NDArray]
        Amplitudes ``(r, t)`` with the shape of `delta`.
    """
    d = np.asarray(delta, dtype=np.float64)
    kappa, length = spec.kappa, spec.length
    gamma = np.sqrt(kappa**2 - d**2 + 0j)
    c, s = cosh_sinhc(gamma * length)
    denominator = c + 1j * d * length * s
    t = 1 / denominator
    r = -1j * kappa * length * s / denominator
    if d.ndim == 0:
        return complex(r), complex(t)
    return r, t


def uniform_grating_spectrum(
    spec: GratingSpec, wavelengths: WavelengthLike, dispersion: DispersionModel
) -> Spectrum:
    """Closed-form spectrum of an unperturbed section."""
    x = np.asarray(wavelengths, dtype=np.float64)
    r, t = uniform_grating_response(spec, detuning(x, spec, dispersion))
    return Spectrum(
        x,
        np.abs(t) ** 2,
        np.abs(r) ** 2,
        {"composition": "closed-form", "realization": None},
    )


def estimate_kappa(
    geometry: WaveguideGeometry,
    spec: GratingSpec,
    wavelength: Optional[float] = None,
) -> float:
    """Perturbative estimate ``κ ≈ (2/λ) Δn sin(π D)``.

    Δn is the effective-index difference between strips of width
    ``avg_width ± corrugation/2``, averaged over both modes of the pair. The
    estimate neglects the modal overlap of the hybrid pair and is only
    indicative; calibrate κ from a measured bandwidth when available.
    """
    if wavelength is None:
        wavelength = 1550.0
    wide = geometry.with_width(spec.avg_width + spec.corrugation / 2)
    narrow = geometry.with_width(spec.avg_width - spec.corrugation / 2)
    swing = np.mean(
        [
            effective_index_2d(wide, wavelength, m).n_eff
            - effective_index_2d(narrow, wavelength, m).n_eff
            for m in set(spec.modes)
        ]
    )
    return float(2 / wavelength * swing * np.sin(np.pi * spec.duty_cycle))


__all__ = [
    "MODE_PAIRS",
    "GratingSpec",
    "BraggSolution",
    "bragg_wavelength",
    "detuning",
    "peak_rejection_db",
    "rejection_to_kappa_length",
    "bandwidth_nm",
    "mean_group_index",
    "kappa_from_bandwidth",
    "bandwidth_to_length",
    "cosh_sinhc",
    "uniform_grating_response",
    "uniform_grating_spectrum",
    "estimate_kappa",
]
