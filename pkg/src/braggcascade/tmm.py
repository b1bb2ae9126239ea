from __future__ import annotations
import dataclasses
import hashlib
import json
import math
from typing import Optional, Sequence, Union
import numpy as np
from .typing import NDArray, Perturbation, PowerSpectrum, TransferMatrix, WavelengthLike
from .tools import (
    CompositionMismatch,
    InvalidInput,
    SegmentationMismatch,
    make_logger,
)
from .modes import DispersionModel
from .cmt import GratingSpec, cosh_sinhc, detuning
from .spectra import Spectrum

COMPOSITIONS = ("coherent", "incoherent")

DEFAULT_LINK_LENGTH = 20_000.0
"""Length of the single-mode waveguide between sections (nm)."""

DEFAULT_LINK_INDEX = 2.2
"""Effective index of the fundamental mode of a 400 nm wide link."""

CHUNK_ELEMENTS = 2**18
"""Segment-wavelength pairs evaluated per vectorized block."""


@dataclasses.dataclass(frozen=True)
class Segment:
    """Piece of a grating with constant coupling and index perturbation.

    Parameters
    ----------
    length : float
        Segment length (nm).
    local_kappa : float
        Coupling coefficient (1/nm).
    delta_neff_perturbation : float, default = 0.0
        Shift of the effective-index sum entering the detuning.
    """

    length: float
    local_kappa: float
    delta_neff_perturbation: float = 0.0

    def __post_init__(self):
        if not self.length > 0:
            raise InvalidInput(f"Segment length must be positive: {self.length}")
        if not self.local_kappa >= 0:
            raise InvalidInput(f"Segment coupling must be non-negative: {self.local_kappa}")


def coupled_mode_matrix(
    kappa: Union[float, NDArray],
    delta: Union[float, NDArray],
    length: Union[float, NDArray],
) -> TransferMatrix:
    """Transfer matrix of a uniform coupled-mode element.

    Integrates ``a' = -i δ a - i κ b``, ``b' = i κ a + i δ b`` over `length`,
    giving ``[[c - i δ ℓ s, -i κ ℓ s], [i κ ℓ s, c + i δ ℓ s]]`` with
    ``c = cosh γℓ``, ``s = sinh(γℓ)/(γℓ)`` and ``γ² = κ² - δ²``. The arguments
    broadcast; the result has shape ``broadcast_shape + (2, 2)``.
    """
    kappa, delta, length = np.broadcast_arrays(
        np.asarray(kappa, dtype=np.float64),
        np.asarray(delta, dtype=np.float64),
        np.asarray(length, dtype=np.float64),
    )
    gamma = np.sqrt(kappa**2 - delta**2 + 0j)
    c, s = cosh_sinhc(gamma * length)
    ds = 1j * delta * length * s
    ks = 1j * kappa * length * s
    output = np.empty(kappa.shape + (2, 2), dtype=np.complex128)
    output[..., 0, 0] = c - ds
    output[..., 0, 1] = -ks
    output[..., 1, 0] = ks
    output[..., 1, 1] = c + ds
    return output


def segment_matrix(
    segment: Segment,
    wavelength: WavelengthLike,
    spec: GratingSpec,
    dispersion: DispersionModel,
) -> TransferMatrix:
    """Transfer matrix of `segment` at the given wavelengths.

    The detuning of the grating is displaced by ``π Δn / λ``, where Δn is
    the segment's perturbation of the effective-index sum.
    """
    x = np.asarray(wavelength, dtype=np.float64)
    delta = detuning(x, spec, dispersion) + np.pi * segment.delta_neff_perturbation / x
    return coupled_mode_matrix(segment.local_kappa, delta, segment.length)


def chain_product(stack: NDArray) -> TransferMatrix:
    """Ordered product ``stack[-1] @ ... @ stack[0]`` along the first axis.

    Neighbours are multiplied pairwise, halving the stack at every round.
    """
    stack = np.asarray(stack)
    left: Optional[NDArray] = None
    while stack.shape[0] > 1:
        if stack.shape[0] % 2:
            left = stack[-1] if left is None else left @ stack[-1]
            stack = stack[:-1]
        stack = np.matmul(stack[1::2], stack[0::2])
    return stack[0] if left is None else left @ stack[0]


def scattering(matrix: TransferMatrix) -> tuple[NDArray, NDArray]:
    """Reflection and transmission amplitudes ``r = -M21/M22``, ``t = 1/M22``
    of unimodular transfer matrices."""
    m = np.asarray(matrix)
    return -m[..., 1, 0] / m[..., 1, 1], 1 / m[..., 1, 1]


def _perturbation(spec: GratingSpec, perturbation: Optional[Perturbation]) -> NDArray:
    if perturbation is None:
        return np.zeros(spec.segment_count)
    dn = np.asarray(perturbation, dtype=np.float64)
    if dn.shape != (spec.segment_count,):
        raise SegmentationMismatch(
            f"Perturbation of shape {dn.shape} for a grating of "
            f"{spec.segment_count} segments"
        )
    return dn


def grating_matrix(
    spec: GratingSpec,
    wavelength: WavelengthLike,
    perturbation: Optional[Perturbation] = None,
    dispersion: Optional[DispersionModel] = None,
) -> TransferMatrix:
    """Product of the segment matrices of a perturbed grating.

    Parameters
    ----------
    spec : GratingSpec
        Grating section, cut into ``spec.segment_count`` equal segments.
    wavelength : float | ArrayLike
        Wavelengths (nm).
    perturbation : ArrayLike, optional
        Index-sum perturbation of each segment, in propagation order.
    dispersion : DispersionModel
        Effective indices of the modes of the pair.

    Returns
    -------
    TransferMatrix
        Array of shape ``(len(wavelength), 2, 2)``, or ``(2, 2)`` for a
        scalar wavelength.

    Raises
    ------
    SegmentationMismatch
        If `perturbation` does not have one entry per segment.
    """
    if dispersion is None:
        raise InvalidInput("grating_matrix requires a dispersion model")
    dn = _perturbation(spec, perturbation)
    x = np.asarray(wavelength, dtype=np.float64)
    grid = np.atleast_1d(x)
    base = np.asarray(detuning(grid, spec, dispersion))
    chunk = max(1, CHUNK_ELEMENTS // grid.size)
    total: Optional[NDArray] = None
    for start in range(0, dn.size, chunk):
        block = dn[start : start + chunk]
        delta = base[np.newaxis, :] + np.pi * block[:, np.newaxis] / grid[np.newaxis, :]
        product = chain_product(coupled_mode_matrix(spec.kappa, delta, spec.segment_length))
        total = product if total is None else product @ total
    assert total is not None
    return total[0] if x.ndim == 0 else total


@dataclasses.dataclass(frozen=True)
class CascadeSpec:
    """Sections joined by single-mode links.

    Parameters
    ----------
    sections : tuple[GratingSpec, ...]
        Grating sections in propagation order.
    link_lengths : tuple[float, ...]
        Length of each link (nm), one fewer than the sections.
    composition : str, default = "incoherent"
        ``"coherent"`` multiplies amplitude transfer matrices including link
        phases. ``"incoherent"`` multiplies section power transmissions, as
        the back-reflected TE1 light is radiated by the links.
    link_phases : tuple[float, ...], optional
        Explicit link phases (rad) for coherent cascades. When omitted,
        phases are ``2π link_index L / λ``.
    link_index : float, default = DEFAULT_LINK_INDEX
        Effective index of the link waveguide.
    link_loss_db : tuple[float, ...]
        Insertion loss of each link (dB), zero when empty.
    te1_leakage : float, default = 0.0
        Fraction of back-reflected TE1 power that survives a link and
        recouples into the previous section.
    """

    sections: tuple[GratingSpec, ...]
    link_lengths: tuple[float, ...] = ()
    composition: str = "incoherent"
    link_phases: Optional[tuple[float, ...]] = None
    link_index: float = DEFAULT_LINK_INDEX
    link_loss_db: tuple[float, ...] = ()
    te1_leakage: float = 0.0

    def __post_init__(self):
        sections = tuple(self.sections)
        if not sections:
            raise InvalidInput("A cascade needs at least one section")
        object.__setattr__(self, "sections", sections)
        links = len(sections) - 1
        lengths = tuple(float(L) for L in self.link_lengths)
        if len(lengths) != links:
            raise InvalidInput(
                f"{len(sections)} sections need {links} link lengths, got {len(lengths)}"
            )
        if any(not L >= 0 for L in lengths):
            raise InvalidInput("Link lengths must be non-negative")
        object.__setattr__(self, "link_lengths", lengths)
        if self.composition not in COMPOSITIONS:
            raise InvalidInput(f"Unknown composition {self.composition!r}")
        if self.link_phases is not None:
            if self.composition != "coherent":
                raise InvalidInput("Explicit link phases require a coherent cascade")
            phases = tuple(float(p) for p in self.link_phases)
            if len(phases) != links:
                raise InvalidInput(f"Expected {links} link phases, got {len(phases)}")
            object.__setattr__(self, "link_phases", phases)
        loss = tuple(float(x) for x in self.link_loss_db) or (0.0,) * links
        if len(loss) != links or any(not x >= 0 for x in loss):
            raise InvalidInput(f"Expected {links} non-negative link losses")
        object.__setattr__(self, "link_loss_db", loss)
        if not self.link_index > 0:
            raise InvalidInput(f"link_index must be positive: {self.link_index}")
        if not 0 <= self.te1_leakage <= 1:
            raise InvalidInput(f"te1_leakage must lie in [0, 1]: {self.te1_leakage}")

    @classmethod
    def uniform(
        cls,
        section: GratingSpec,
        count: int,
        link_length: float = DEFAULT_LINK_LENGTH,
        composition: str = "incoherent",
        **kwdargs,
    ) -> CascadeSpec:
        """Cascade of `count` identical sections with equal links."""
        if count < 1:
            raise InvalidInput(f"Section count must be positive: {count}")
        return cls(
            (section,) * count, (link_length,) * (count - 1), composition, **kwdargs
        )

    @property
    def link_phase_treatment(self) -> str:
        return "explicit-phase" if self.composition == "coherent" else "ignored"

    @property
    def total_length(self) -> float:
        return sum(s.length for s in self.sections) + sum(self.link_lengths)

    def replace(self, **kwdargs) -> CascadeSpec:
        return dataclasses.replace(self, **kwdargs)

    def digest(self) -> str:
        """Short stable hash of the cascade parameters."""
        text = json.dumps(dataclasses.asdict(self), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def link_phases(
    cascade: CascadeSpec,
    wavelengths: WavelengthLike,
    index_offsets: Optional[Sequence[float]] = None,
) -> NDArray:
    """Phase of every link at every wavelength, shape ``(links, wavelengths)``.

    Explicit phases are wavelength independent. Otherwise the phase is
    ``2π (n_link + offset) L / λ``, with per-link index offsets from the
    fabrication noise.
    """
    x = np.atleast_1d(np.asarray(wavelengths, dtype=np.float64))
    links = len(cascade.link_lengths)
    if cascade.link_phases is not None:
        return np.broadcast_to(
            np.asarray(cascade.link_phases)[:, np.newaxis], (links, x.size)
        )
    offsets = np.zeros(links) if index_offsets is None else np.asarray(index_offsets)
    if offsets.shape != (links,):
        raise SegmentationMismatch(f"Expected {links} link index offsets")
    n = cascade.link_index + offsets
    lengths = np.asarray(cascade.link_lengths)
    return 2 * np.pi * (n * lengths)[:, np.newaxis] / x[np.newaxis, :]


def _link_matrix(phase: NDArray, transmission: float = 1.0) -> TransferMatrix:
    # Power transmission l scales a by √l and keeps the matrix unimodular.
    root = np.sqrt(transmission)
    output = np.zeros(phase.shape + (2, 2), dtype=np.complex128)
    output[..., 0, 0] = root * np.exp(-1j * phase)
    output[..., 1, 1] = np.exp(1j * phase) / root
    return output


def link_transmissions(cascade: CascadeSpec) -> NDArray:
    """Power transmission of every link from its insertion loss."""
    return 10 ** (-np.asarray(cascade.link_loss_db, dtype=np.float64) / 10)


def _perturbations(
    cascade: CascadeSpec, perturbations: Optional[Sequence[Optional[Perturbation]]]
) -> list[Optional[Perturbation]]:
    if perturbations is None:
        return [None] * len(cascade.sections)
    output = list(perturbations)
    if len(output) != len(cascade.sections):
        raise SegmentationMismatch(
            f"{len(output)} perturbations for {len(cascade.sections)} sections"
        )
    return output


def _rates(spec: GratingSpec, rates: Optional[NDArray]) -> NDArray:
    if rates is None:
        return np.zeros(spec.segment_count)
    alpha = np.asarray(rates, dtype=np.float64)
    if alpha.shape != (spec.segment_count,):
        raise SegmentationMismatch(
            f"Scattering rates of shape {alpha.shape} for a grating of "
            f"{spec.segment_count} segments"
        )
    if np.any(~np.isfinite(alpha)) or np.any(alpha < 0):
        raise InvalidInput("Scattering rates must be finite and non-negative")
    return alpha


@dataclasses.dataclass(frozen=True)
class BypassResponse:
    """Power budget of gratings that scatter forward into a bypass channel.

    All arrays are per wavelength and normalized to the input power.

    Parameters
    ----------
    transmission : PowerSpectrum
        Power left in the guided mode at the output.
    reflection : PowerSpectrum
        Power reflected back to the input.
    bypass : PowerSpectrum
        Power scattered forward out of the guided mode that reaches the output.
    """

    transmission: PowerSpectrum
    reflection: PowerSpectrum
    bypass: PowerSpectrum

    @property
    def total(self) -> PowerSpectrum:
        """Guided plus bypass power collected at the output."""
        return np.minimum(self.transmission + self.bypass, 1.0)


def _sweep_section(
    spec: GratingSpec,
    grid: NDArray,
    base: NDArray,
    dn: NDArray,
    alpha: NDArray,
    state: NDArray,
    collected: NDArray,
    downstream: float,
) -> NDArray:
    ell = spec.segment_length
    chunk = max(1, CHUNK_ELEMENTS // grid.size)
    for start in reversed(range(0, dn.size, chunk)):
        block = dn[start : start + chunk]
        delta = base[np.newaxis, :] + np.pi * block[:, np.newaxis] / grid[np.newaxis, :]
        m = coupled_mode_matrix(spec.kappa, delta, ell)
        for j in range(block.size - 1, -1, -1):
            weight = alpha[start + j] * ell
            a = state[0] * math.exp(0.5 * weight)
            b = state[1]
            # Inverse of the unimodular matrix [[p, q], [r, s]] is [[s, -q], [-r, p]].
            state = np.stack(
                (
                    m[j, :, 1, 1] * a - m[j, :, 0, 1] * b,
                    m[j, :, 0, 0] * b - m[j, :, 1, 0] * a,
                )
            )
            if weight:
                lost = np.abs(state[0]) ** 2 + np.abs(a) ** 2
                collected += 0.5 * weight * downstream * lost
    return state


def bypass_sweep(
    sections: Sequence[GratingSpec],
    wavelengths: WavelengthLike,
    dispersion: DispersionModel,
    perturbations: Optional[Sequence[Optional[Perturbation]]] = None,
    scattering_rates: Optional[Sequence[Optional[NDArray]]] = None,
    phases: Optional[NDArray] = None,
    links: Optional[Sequence[float]] = None,
) -> BypassResponse:
    """Fields of phase-coherent sections swept from the output to the input.

    Every segment removes a fraction ``α ℓ`` of the guided forward power and
    sends it into a co-propagating bypass that no longer sees the grating.
    Starting from a unit guided wave at the output, the inverse segment
    matrices give the guided field ``a(z)`` everywhere; the bypass collects
    ``α |a(z)|²`` attenuated by the links downstream, and everything is
    normalized to the input power ``|a(0)|²``. In the stop band ``a(z)``
    decays from the input, so the bypass tends to ``α / (2κ)`` for long
    uniform gratings and the transmission saturates there.

    Parameters
    ----------
    sections : Sequence[GratingSpec]
        Grating sections in propagation order.
    wavelengths : ArrayLike
        Wavelengths (nm).
    dispersion : DispersionModel
        Effective indices of the grating modes.
    perturbations : Sequence[ArrayLike | None], optional
        Index-sum perturbation of each segment of each section.
    scattering_rates : Sequence[ArrayLike | None], optional
        Forward scattering rate α (1/nm) of each segment of each section.
    phases : NDArray, optional
        Link phases of shape ``(links, wavelengths)``.
    links : Sequence[float], optional
        Power transmission of each link.
    """
    x = np.atleast_1d(np.asarray(wavelengths, dtype=np.float64))
    count = len(sections)
    dn = [None] * count if perturbations is None else list(perturbations)
    rates = [None] * count if scattering_rates is None else list(scattering_rates)
    if len(dn) != count or len(rates) != count:
        raise SegmentationMismatch(f"Expected per-section data for {count} sections")
    if phases is None:
        phases = np.zeros((count - 1, x.size))
    link_power = np.ones(count - 1) if links is None else np.asarray(links)
    state = np.zeros((2, x.size), dtype=np.complex128)
    state[0] = 1.0
    collected = np.zeros(x.size)
    downstream = 1.0
    for i in range(count - 1, -1, -1):
        spec = sections[i]
        base = np.asarray(detuning(x, spec, dispersion))
        state = _sweep_section(
            spec,
            x,
            base,
            _perturbation(spec, dn[i]),
            _rates(spec, rates[i]),
            state,
            collected,
            downstream,
        )
        if i:
            root = np.sqrt(link_power[i - 1])
            turn = np.exp(1j * phases[i - 1])
            state = np.stack((state[0] * turn / root, state[1] * root / turn))
            downstream *= float(link_power[i - 1])
    power = np.abs(state[0]) ** 2
    return BypassResponse(
        np.minimum(1 / power, 1.0), np.abs(state[1]) ** 2 / power, collected / power
    )


def coherent_cascade(
    cascade: CascadeSpec,
    wavelengths: WavelengthLike,
    dispersion: DispersionModel,
    perturbations: Optional[Sequence[Optional[Perturbation]]] = None,
    phases: Optional[NDArray] = None,
    scattering_rates: Optional[Sequence[Optional[NDArray]]] = None,
) -> tuple[PowerSpectrum, PowerSpectrum]:
    """Power transmission and reflection of a phase-coherent cascade.

    Links attenuate the guided amplitude by the square root of their power
    transmission, from ``cascade.link_loss_db``. With scattering rates, the
    sections and links are swept together by :func:`bypass_sweep` and the
    bypass power of every section reaches the output.

    Parameters
    ----------
    cascade : CascadeSpec
        A cascade with ``composition == "coherent"``.
    wavelengths : ArrayLike
        Wavelengths (nm).
    dispersion : DispersionModel
        Effective indices of the grating modes.
    perturbations : Sequence[ArrayLike | None], optional
        Per-section index perturbations.
    phases : NDArray, optional
        Link phases of shape ``(links,)`` or ``(links, wavelengths)``;
        defaults to :func:`link_phases`.
    scattering_rates : Sequence[ArrayLike | None], optional
        Per-section forward scattering rates of every segment (1/nm).

    Returns
    -------
    tuple[PowerSpectrum, PowerSpectrum]
        Transmission ``T`` and reflection ``R``, with ``T + R = 1`` for
        lossless links and no scattering.
    """
    if cascade.composition != "coherent":
        raise CompositionMismatch("coherent_cascade", cascade.composition)
    x = np.atleast_1d(np.asarray(wavelengths, dtype=np.float64))
    dn = _perturbations(cascade, perturbations)
    if phases is None:
        phases = link_phases(cascade, x)
    phases = np.asarray(phases, dtype=np.float64)
    if phases.ndim == 1:
        phases = phases[:, np.newaxis]
    phases = np.broadcast_to(phases, (len(cascade.link_lengths), x.size))
    links = link_transmissions(cascade)
    if scattering_rates is not None:
        response = bypass_sweep(
            cascade.sections, x, dispersion, dn, scattering_rates, phases, links
        )
        return response.total, response.reflection
    total = grating_matrix(cascade.sections[0], x, dn[0], dispersion)
    for j, section in enumerate(cascade.sections[1:]):
        total = _link_matrix(phases[j], links[j]) @ total
        total = grating_matrix(section, x, dn[j + 1], dispersion) @ total
    r, t = scattering(total)
    return np.abs(t) ** 2, np.abs(r) ** 2


def _fold(
    transmissions: NDArray,
    reflections: NDArray,
    leakage: float,
    link_transmissions: NDArray,
) -> tuple[NDArray, NDArray]:
    # Returns the total transmission and the reflectance seen from the output end.
    total_t, total_r = transmissions[0], reflections[0]
    for t, r, link in zip(transmissions[1:], reflections[1:], link_transmissions):
        loop = leakage * link
        denominator = 1 - loop * total_r * r
        total_t = total_t * link * t / denominator
        total_r = r + t * t * loop * total_r / denominator
    return total_t, total_r


def incoherent_cascade(
    section_transmissions: Union[Sequence, NDArray],
    te1_leakage: float = 0.0,
    link_transmissions: Optional[Sequence[float]] = None,
) -> PowerSpectrum:
    """Power transmission of sections whose back-reflections are radiated.

    Without leakage the result is the product of the section transmissions,
    so that rejections in dB add. With a leakage ε of the back-reflected TE1
    power, neighbouring stages form incoherent cavities and combine as
    ``T_A T_B / (1 - ε R_A R_B)`` with ``R = 1 - T``.

    Parameters
    ----------
    section_transmissions : ArrayLike
        Array of shape ``(sections,)`` or ``(sections, wavelengths)``.
    te1_leakage : float, default = 0.0
        Surviving fraction ε of the back-reflected power.
    link_transmissions : Sequence[float], optional
        Power transmission of each link.
    """
    t = np.asarray(section_transmissions, dtype=np.float64)
    if t.ndim == 0 or t.shape[0] == 0:
        raise InvalidInput("At least one section transmission is required")
    if np.any(~np.isfinite(t)) or np.any(t < 0) or np.any(t > 1):
        raise InvalidInput("Section transmissions must lie within [0, 1]")
    if not 0 <= te1_leakage <= 1:
        raise InvalidInput(f"te1_leakage must lie in [0, 1]: {te1_leakage}")
    links = (
        np.ones(t.shape[0] - 1)
        if link_transmissions is None
        else np.asarray(link_transmissions, dtype=np.float64)
    )
    if links.shape != (t.shape[0] - 1,):
        raise InvalidInput(f"Expected {t.shape[0] - 1} link transmissions")
    if te1_leakage == 0:
        return np.prod(t, axis=0) * np.prod(links)
    return _fold(t, 1 - t, te1_leakage, links)[0]


def section_responses(
    cascade: CascadeSpec,
    wavelengths: WavelengthLike,
    dispersion: DispersionModel,
    perturbations: Optional[Sequence[Optional[Perturbation]]] = None,
) -> tuple[NDArray, NDArray]:
    """Power transmission and reflection of every section on its own.

    Returns two arrays of shape ``(sections, wavelengths)``.
    """
    x = np.atleast_1d(np.asarray(wavelengths, dtype=np.float64))
    dn = _perturbations(cascade, perturbations)
    transmission = np.empty((len(cascade.sections), x.size))
    reflection = np.empty_like(transmission)
    for i, (section, p) in enumerate(zip(cascade.sections, dn)):
        r, t = scattering(grating_matrix(section, x, p, dispersion))
        transmission[i] = np.minimum(np.abs(t) ** 2, 1.0)
        reflection[i] = np.abs(r) ** 2
    return transmission, reflection


def _incoherent_bypass(
    cascade: CascadeSpec,
    x: NDArray,
    dispersion: DispersionModel,
    perturbations: Optional[Sequence[Optional[Perturbation]]],
    scattering_rates: Sequence[Optional[NDArray]],
) -> tuple[NDArray, NDArray, NDArray]:
    # Depleted transmissions, reflections and the bypass of the last section.
    dn = _perturbations(cascade, perturbations)
    rates = _perturbations(cascade, scattering_rates)
    responses = [
        bypass_sweep((section,), x, dispersion, [p], [a])
        for section, p, a in zip(cascade.sections, dn, rates)
    ]
    transmission = np.minimum([s.transmission for s in responses], 1.0)
    reflection = np.array([s.reflection for s in responses])
    return transmission, reflection, responses[-1].bypass


def cascade_spectrum(
    cascade: CascadeSpec,
    grid: WavelengthLike,
    dispersion: DispersionModel,
    noise_realization: Optional[Sequence[Optional[Perturbation]]] = None,
    link_offsets: Optional[Sequence[float]] = None,
    realization_id: Optional[int] = None,
    scattering_rates: Optional[Sequence[Optional[NDArray]]] = None,
) -> Spectrum:
    """Spectrum of a cascade under its composition law.

    Parameters
    ----------
    cascade : CascadeSpec
        Sections, links and composition.
    grid : ArrayLike
        Strictly increasing wavelengths (nm).
    dispersion : DispersionModel
        Effective indices of the grating modes.
    noise_realization : Sequence[ArrayLike], optional
        Per-section index perturbations, e.g. from
        :func:`braggcascade.fabnoise.sample_cascade`.
    link_offsets : Sequence[float], optional
        Per-link index offsets of a coherent cascade.
    realization_id : int, optional
        Trial index recorded in the spectrum metadata.
    scattering_rates : Sequence[ArrayLike], optional
        Per-section forward scattering rates, e.g. from
        :func:`braggcascade.fabnoise.sample_scattering`. In an incoherent
        cascade the links radiate the bypass of every section but the last.

    Returns
    -------
    Spectrum
        Transmission and the power reflected back to the input.
    """
    x = np.asarray(grid, dtype=np.float64)
    if x.ndim != 1 or x.size == 0 or np.any(np.diff(x) <= 0):
        raise InvalidInput("Wavelength grid must be a strictly increasing vector")
    with make_logger(2) as logger:
        logger(
            f"cascade_spectrum: {len(cascade.sections)} {cascade.composition} "
            f"sections, {x.size} wavelengths, realization {realization_id}"
        )
        if cascade.composition == "coherent":
            phases = link_phases(cascade, x, link_offsets)
            transmission, reflection = coherent_cascade(
                cascade, x, dispersion, noise_realization, phases, scattering_rates
            )
        else:
            links = link_transmissions(cascade)
            if scattering_rates is None:
                t, r = section_responses(cascade, x, dispersion, noise_realization)
                transmission = incoherent_cascade(t, cascade.te1_leakage, links)
            else:
                t, r, bypass = _incoherent_bypass(
                    cascade, x, dispersion, noise_realization, scattering_rates
                )
                transmission = incoherent_cascade(t, cascade.te1_leakage, links)
                feed = 1.0
                if len(cascade.sections) > 1:
                    feed = links[-1] * incoherent_cascade(
                        t[:-1], cascade.te1_leakage, links[:-1]
                    )
                transmission = np.minimum(transmission + feed * bypass, 1.0)
            if cascade.te1_leakage == 0:
                reflection = r[0]
            else:
                reflection = _fold(t[::-1], r[::-1], cascade.te1_leakage, links[::-1])[1]
    metadata = {
        "composition": cascade.composition,
        "realization": realization_id,
        "cascade_hash": cascade.digest(),
    }
    return Spectrum(x, transmission, reflection, metadata)


__all__ = [
    "COMPOSITIONS",
    "Segment",
    "coupled_mode_matrix",
    "segment_matrix",
    "chain_product",
    "scattering",
    "grating_matrix",
    "CascadeSpec",
    "link_phases",
    "link_transmissions",
    "BypassResponse",
    "bypass_sweep",
    "coherent_cascade",
    "incoherent_cascade",
    "section_responses",
    "cascade_spectrum",
]
